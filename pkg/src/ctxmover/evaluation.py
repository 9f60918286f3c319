"""Evaluation metrics and task harnesses.

Covers the three benchmark families: sentence similarity (per-file Pearson,
averaged per group and then across groups), word similarity (Spearman with a
pair-count-weighted average), and hypernymy detection (average precision over
the full ranking, or threshold accuracy for detection-style sets).

Out-of-vocabulary policies follow the tasks' conventions: sentence pairs that
cannot be scored take their file's mean similarity, word-similarity pairs are
dropped from both correlation and weights, and hypernymy pairs are pushed to
the bottom of the ranking as assumed negatives (while still counting toward
the positive total if labelled positive).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.stats import rankdata

from .errors import BadParameter, DegenerateMetric, EmptySentence, FormatError, IoError

# ---------------------------------------------------------------------------
# metrics
# ---------------------------------------------------------------------------

def pearson(xs, ys) -> float:
    """Product-moment correlation; rejects degenerate inputs."""
    x = np.asarray(xs, dtype=np.float64)
    y = np.asarray(ys, dtype=np.float64)
    if x.size != y.size:
        raise BadParameter(f"length mismatch: {x.size} vs {y.size}")
    if x.size < 2:
        raise BadParameter("correlation needs at least 2 points")
    xc = x - x.mean()
    yc = y - y.mean()
    vx = float(xc @ xc)
    vy = float(yc @ yc)
    if vx == 0.0 or vy == 0.0:
        raise DegenerateMetric("zero variance input to correlation")
    return float((xc @ yc) / np.sqrt(vx * vy))


def spearman(xs, ys) -> float:
    """Pearson correlation of average ranks (ties share their mean rank)."""
    x = np.asarray(xs, dtype=np.float64)
    y = np.asarray(ys, dtype=np.float64)
    if x.size != y.size:
        raise BadParameter(f"length mismatch: {x.size} vs {y.size}")
    if x.size < 2:
        raise BadParameter("correlation needs at least 2 points")
    return pearson(rankdata(x, method="average"), rankdata(y, method="average"))


def average_precision_at_all(scores, labels, oov_mask=None) -> float:
    """Average precision over the whole ranked list.

    Scored items are ranked by descending score (ties keep input order);
    out-of-vocabulary items follow in input order, so an OOV pair is
    effectively an assumed negative, but one labelled positive still counts
    in the denominator and contributes precision at its appended rank.
    """
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels, dtype=bool)
    if scores.size != labels.size:
        raise BadParameter(f"length mismatch: {scores.size} vs {labels.size}")
    if oov_mask is None:
        oov_mask = np.zeros(scores.size, dtype=bool)
    else:
        oov_mask = np.asarray(oov_mask, dtype=bool)
        if oov_mask.size != scores.size:
            raise BadParameter("oov mask length mismatch")
    n_pos = int(labels.sum())
    if n_pos == 0:
        raise DegenerateMetric("average precision needs at least one positive")

    scored = np.flatnonzero(~oov_mask)
    order = scored[np.argsort(-scores[scored], kind="stable")]
    ranking = np.concatenate([order, np.flatnonzero(oov_mask)])
    hits = 0
    total = 0.0
    for rank, idx in enumerate(ranking, start=1):
        if labels[idx]:
            hits += 1
            total += hits / rank
    return total / n_pos


def detection_accuracy(scores, labels, val_scores, val_labels) -> float:
    """Test accuracy at the threshold tuned on a validation split.

    Predicts positive when score >= threshold; the threshold is the
    validation score value maximizing validation accuracy, ties resolved
    toward the lowest threshold.
    """
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels, dtype=bool)
    vs = np.asarray(val_scores, dtype=np.float64)
    vl = np.asarray(val_labels, dtype=bool)
    if vs.size == 0:
        raise BadParameter("validation split is empty")
    if scores.size != labels.size or vs.size != vl.size:
        raise BadParameter("scores/labels length mismatch")
    best_theta, best_acc = None, -1.0
    for theta in np.unique(vs):  # ascending, so ties keep the lowest
        acc = float(((vs >= theta) == vl).mean())
        if acc > best_acc:
            best_theta, best_acc = theta, acc
    return float(((scores >= best_theta) == labels).mean())


# ---------------------------------------------------------------------------
# datasets
# ---------------------------------------------------------------------------

@dataclass
class PairDataset:
    """Scored item pairs of one benchmark file."""

    records: list
    task_tag: str
    name: str = ""
    group: str = ""


def _read_tsv(path, n_cols):
    path = Path(path)
    if not path.exists():
        raise IoError(f"dataset file not found: {path}")
    rows = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split("\t")
            if len(parts) != n_cols:
                raise FormatError(f"{path}:{lineno}: expected {n_cols} tab-separated fields")
            rows.append(parts)
    return rows


def load_sts_file(path, group="", name=None) -> PairDataset:
    """`sentence1<TAB>sentence2<TAB>gold` with gold on the 0..5 scale."""
    records = []
    for s1, s2, gold in _read_tsv(path, 3):
        records.append((s1.split(), s2.split(), float(gold)))
    return PairDataset(records=records, task_tag="sts", group=group,
                       name=name or Path(path).stem)


_TRUE_LABELS = {"true", "hyper", "1"}
_FALSE_LABELS = {"false", "other", "0"}


def load_hypernymy_file(path, name=None) -> PairDataset:
    """`word1<TAB>word2<TAB>label` with label True/False or hyper/other."""
    records = []
    for w1, w2, label in _read_tsv(path, 3):
        low = label.strip().lower()
        if low in _TRUE_LABELS:
            lab = True
        elif low in _FALSE_LABELS:
            lab = False
        else:
            raise FormatError(f"{path}: unknown label {label!r}")
        records.append((w1, w2, lab))
    return PairDataset(records=records, task_tag="hypernymy",
                       name=name or Path(path).stem)


def load_wordsim_file(path, name=None) -> PairDataset:
    """`word1<TAB>word2<TAB>score`."""
    records = [(w1, w2, float(score)) for w1, w2, score in _read_tsv(path, 3)]
    return PairDataset(records=records, task_tag="wordsim",
                       name=name or Path(path).stem)


# ---------------------------------------------------------------------------
# harnesses
# ---------------------------------------------------------------------------

@dataclass
class FileScore:
    name: str
    group: str
    value: float | None
    n_pairs: int
    n_skipped: int = 0
    error: str = ""


@dataclass
class StsReport:
    files: list[FileScore] = field(default_factory=list)

    @property
    def per_group(self) -> dict[str, float]:
        groups: dict[str, list[float]] = {}
        for fs in self.files:
            if fs.value is not None:
                groups.setdefault(fs.group, []).append(fs.value)
        return {g: float(np.mean(v)) for g, v in sorted(groups.items())}

    @property
    def average(self) -> float | None:
        per_group = self.per_group
        if not per_group:
            return None
        return float(np.mean(list(per_group.values())))


def run_sts(datasets, scorer) -> StsReport:
    """Score sentence pairs with a distance scorer and report Pearson.

    ``scorer(tokens1, tokens2)`` returns a distance; similarity is its
    negation.  Pairs raising `EmptySentence` (all words out of vocabulary)
    take the file's mean similarity.  Files whose every pair fails, or with
    degenerate golds, are reported with an error instead of a value.
    """
    report = StsReport()
    for ds in datasets:
        sims: list[float | None] = []
        golds = []
        skipped = 0
        for tokens1, tokens2, gold in ds.records:
            golds.append(gold)
            try:
                sims.append(-float(scorer(tokens1, tokens2)))
            except EmptySentence:
                sims.append(None)
                skipped += 1
        usable = [s for s in sims if s is not None]
        if not usable:
            report.files.append(FileScore(ds.name, ds.group, None, len(golds),
                                          skipped, error="no scorable pairs"))
            continue
        fill = float(np.mean(usable))
        sims = [fill if s is None else s for s in sims]
        try:
            value = pearson(sims, golds)
            report.files.append(FileScore(ds.name, ds.group, value, len(golds), skipped))
        except (DegenerateMetric, BadParameter) as exc:
            report.files.append(FileScore(ds.name, ds.group, None, len(golds),
                                          skipped, error=str(exc)))
    return report


@dataclass
class TaskReport:
    rows: list[dict] = field(default_factory=list)

    @property
    def weighted_average(self) -> float | None:
        pairs = [(r["value"], r["weight"]) for r in self.rows
                 if r.get("value") is not None and r.get("weight", 0) > 0]
        if not pairs:
            return None
        values, weights = zip(*pairs)
        return float(np.average(values, weights=weights))


def run_wordsim(datasets, scorer) -> TaskReport:
    """Spearman correlation per dataset over in-vocabulary pairs.

    ``scorer(w1, w2)`` returns a distance or None when either word is out of
    vocabulary; OOV pairs are dropped from the correlation and from the
    weighted average's weights.
    """
    report = TaskReport()
    for ds in datasets:
        sims, golds = [], []
        n_oov = 0
        for w1, w2, gold in ds.records:
            d = scorer(w1, w2)
            if d is None:
                n_oov += 1
                continue
            sims.append(-float(d))
            golds.append(gold)
        row = {"dataset": ds.name, "pairs": len(ds.records),
               "oov": n_oov, "weight": len(golds)}
        try:
            row["value"] = spearman(sims, golds) if golds else None
            if not golds:
                row["error"] = "all pairs out of vocabulary"
        except (DegenerateMetric, BadParameter) as exc:
            row["value"] = None
            row["error"] = str(exc)
        report.rows.append(row)
    return report


def _score_hypernymy_pairs(ds, scorer):
    scores = np.zeros(len(ds.records))
    labels = np.zeros(len(ds.records), dtype=bool)
    oov = np.zeros(len(ds.records), dtype=bool)
    for i, (w1, w2, label) in enumerate(ds.records):
        labels[i] = label
        s = scorer(w1, w2)
        if s is None:
            oov[i] = True
        else:
            scores[i] = float(s)
    return scores, labels, oov


def run_hypernymy(datasets, scorer, validation=None,
                  accuracy_datasets=("bibless",)) -> TaskReport:
    """AP over the full ranking per dataset; accuracy for detection sets.

    ``scorer(w1, w2)`` returns a hypernymy score (higher means the first
    word is more plausibly a hyponym of the second) or None when a word is
    out of vocabulary.  Datasets whose name contains one of
    ``accuracy_datasets`` report threshold accuracy instead of AP and
    require a ``validation`` dataset for tuning.
    """
    val_scored = None
    if validation is not None:
        vs, vl, voov = _score_hypernymy_pairs(validation, scorer)
        val_scored = (vs[~voov], vl[~voov])

    report = TaskReport()
    for ds in datasets:
        scores, labels, oov = _score_hypernymy_pairs(ds, scorer)
        needs_accuracy = any(tag in ds.name.lower() for tag in accuracy_datasets)
        row = {"dataset": ds.name, "pairs": len(ds.records),
               "oov": int(oov.sum()), "weight": len(ds.records)}
        try:
            if needs_accuracy:
                if val_scored is None or val_scored[0].size == 0:
                    raise BadParameter(
                        f"dataset {ds.name} reports accuracy and needs a validation split")
                keep = ~oov
                row["metric"] = "accuracy"
                row["value"] = detection_accuracy(scores[keep], labels[keep], *val_scored)
            else:
                row["metric"] = "ap"
                row["value"] = average_precision_at_all(scores, labels, oov)
        except (DegenerateMetric, BadParameter) as exc:
            row["value"] = None
            row["error"] = str(exc)
        report.rows.append(row)
    return report


# ---------------------------------------------------------------------------
# report files
# ---------------------------------------------------------------------------

def write_tsv_report(path, header, rows):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\t".join(header) + "\n")
        for row in rows:
            fh.write("\t".join("" if v is None else str(v) for v in row) + "\n")


def write_summary(path, items):
    """Machine-readable `key=value` lines, sorted by key."""
    with open(path, "w", encoding="utf-8") as fh:
        for key in sorted(items):
            fh.write(f"{key}={items[key]}\n")
