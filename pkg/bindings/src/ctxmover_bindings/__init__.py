"""Scripting surface over ctxmover artifacts: load, score, evaluate.

The wrapper exposes exactly five calls (`load`, `distance`,
`sentence_distance`, `neighbors`, `evaluate`) over the files the ctxmover
CLI produces, so the toolkit plugs into existing evaluation workflows
without touching pipeline construction.  Results are numerically identical
to the corresponding CLI invocations on the same inputs.

Primary-library errors propagate unchanged, so their names (`OovError`,
`FormatError`, ...) are preserved; the only binding-level error is
`ClosedHandleError` for use-after-close.  Handles are immutable after
`load` and safe for concurrent readers; the heavy numerics run inside the
core's vectorized kernels, which release the interpreter lock during BLAS
work.
"""

from __future__ import annotations

from pathlib import Path

import ctxmover
from ctxmover import RunConfig
from ctxmover.errors import BadParameter, CtxMoverError, EmptySentence, OovError

__version__ = ctxmover.__version__

__all__ = [
    "BoundStore",
    "ClosedHandleError",
    "load",
    "distance",
    "sentence_distance",
    "neighbors",
    "evaluate",
]


class ClosedHandleError(RuntimeError):
    """The handle was closed; reload the store to keep scoring."""


class BoundStore:
    """Opaque handle over a loaded vocabulary, histogram store, and ground
    space, plus the scoring configuration fixed at load time."""

    def __init__(self, vocab, store, space, config):
        self._vocab = vocab
        self._store = store
        self._space = space
        self._config = config
        self._open = True

    def close(self):
        self._open = False

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()
        return False

    def _parts(self):
        if not self._open:
            raise ClosedHandleError("store handle is closed")
        return self._vocab, self._store, self._space, self._config

    @property
    def vocab_size(self):
        self._parts()
        return len(self._vocab)


def load(vocab, hist, clusters, embeddings=None, entail_vectors=None,
         **options) -> BoundStore:
    """Open CLI-produced artifacts for scoring.

    ``options`` accepts the scoring keys of the run configuration (`metric`,
    `p`, `lam`, `iters`, `mixing`, `pc_removal`, `cost_mode`, `clip`, `seed`,
    `entail_direction`) with the same defaults as the CLI.
    """
    from ctxmover.clustering import ContextClustering, load_embeddings
    from ctxmover.corpus import Vocabulary
    from ctxmover.distance import GroundSpace
    from ctxmover.estimates import HistogramStore, PointEstimateTable, remove_pc

    cfg = RunConfig().override(**options)
    vocab_t = Vocabulary.load(vocab)
    store = HistogramStore.load(hist, mixing=cfg.mixing)
    clustering = ContextClustering.load(clusters)
    vec_path = entail_vectors if cfg.metric == "entailment" else embeddings
    if vec_path is None:
        which = "entail_vectors" if cfg.metric == "entailment" else "embeddings"
        raise BadParameter(f"metric {cfg.metric!r} needs the {which} file")
    points = PointEstimateTable(load_embeddings(vec_path, vocab_t).vectors)
    if cfg.pc_removal:
        points = remove_pc(points, seed=cfg.seed)
    space = GroundSpace.assemble(clustering.centroids, points.vectors,
                                 metric=cfg.metric, p=cfg.p)
    return BoundStore(vocab_t, store, space, cfg)


def _word_id(vocab, token):
    wid = vocab.get(token)
    if wid is None:
        raise OovError(f"word {token!r} not in vocabulary")
    return wid


def distance(store: BoundStore, w1: str, w2: str) -> float:
    """Transport distance between two words (directional for entailment)."""
    from ctxmover.distance import cmd

    vocab, hist, space, cfg = store._parts()
    return cmd(_word_id(vocab, w1), _word_id(vocab, w2), hist, space,
               lam=cfg.lam, iters=cfg.iters, cost_mode=cfg.cost_mode, clip=cfg.clip)


def _sentence_ids(vocab, tokens):
    ids = [wid for wid in (vocab.get(t) for t in tokens) if wid is not None]
    if not ids:
        raise EmptySentence("every word of the sentence is out of vocabulary")
    return ids


def sentence_distance(store: BoundStore, tokens1, tokens2) -> float:
    """Distance between two sentences' barycenter histograms."""
    from ctxmover.distance import sentence_cmd

    vocab, hist, space, cfg = store._parts()
    return sentence_cmd(_sentence_ids(vocab, tokens1), _sentence_ids(vocab, tokens2),
                        hist, space, lam=cfg.lam, iters=cfg.iters,
                        cost_mode=cfg.cost_mode, clip=cfg.clip)


def neighbors(store: BoundStore, query, k: int = 10):
    """Closest vocabulary words to a word (str) or sentence (token list).

    Word queries exclude the query itself, mirroring the CLI.  Returns
    (token, distance) pairs, ascending.
    """
    from ctxmover.distance import comb, nearest_neighbors

    vocab, hist, space, cfg = store._parts()
    if isinstance(query, str):
        wid = _word_id(vocab, query)
        candidates = [i for i in range(len(vocab)) if i != wid]
        target = wid
    else:
        ids = _sentence_ids(vocab, query)
        target = comb(ids, hist, space, lam=cfg.lam, iters=cfg.iters,
                      cost_mode=cfg.cost_mode, clip=cfg.clip)
        candidates = list(range(len(vocab)))
    ranked = nearest_neighbors(target, candidates, k=min(k, len(candidates)),
                               store=hist, space=space, lam=cfg.lam,
                               iters=cfg.iters, cost_mode=cfg.cost_mode,
                               clip=cfg.clip)
    return [(vocab.tokens[wid], dist) for wid, dist in ranked]


def evaluate(store: BoundStore, dataset_path, task: str, validation=None) -> dict:
    """Run one evaluation harness over a dataset directory.

    ``task`` is one of ``sts``, ``wordsim``, ``hypernymy``.  Returns a flat
    metrics map mirroring the CLI summary files (plus the aggregate under
    ``average`` or ``weighted_average``).
    """
    vocab, hist, space, cfg = store._parts()
    path = Path(dataset_path)

    if task == "sts":
        from ctxmover.distance import sentence_cmd
        from ctxmover.evaluation import load_sts_file, run_sts

        def scorer(tokens1, tokens2):
            return sentence_cmd(_sentence_ids(vocab, tokens1),
                                _sentence_ids(vocab, tokens2), hist, space,
                                lam=cfg.lam, iters=cfg.iters,
                                cost_mode=cfg.cost_mode, clip=cfg.clip)

        groups = sorted(p for p in path.iterdir() if p.is_dir()) or [path]
        datasets = [load_sts_file(f, group=g.name)
                    for g in groups for f in sorted(g.glob("*.tsv"))]
        report = run_sts(datasets, scorer)
        out = {f"{fs.group}/{fs.name}": fs.value for fs in report.files}
        out.update({f"group:{g}": v for g, v in report.per_group.items()})
        out["average"] = report.average
        return out

    if task == "wordsim":
        from ctxmover.distance import cmd
        from ctxmover.evaluation import load_wordsim_file, run_wordsim

        def scorer(w1, w2):
            i1, i2 = vocab.get(w1), vocab.get(w2)
            if i1 is None or i2 is None:
                return None
            return cmd(i1, i2, hist, space, lam=cfg.lam, iters=cfg.iters,
                       cost_mode=cfg.cost_mode, clip=cfg.clip)

        datasets = [load_wordsim_file(f) for f in sorted(path.glob("*.tsv"))]
        report = run_wordsim(datasets, scorer)
        out = {row["dataset"]: row.get("value") for row in report.rows}
        out["weighted_average"] = report.weighted_average
        return out

    if task == "hypernymy":
        from ctxmover.distance import cmd
        from ctxmover.evaluation import load_hypernymy_file, run_hypernymy

        source_first = cfg.entail_direction == "source-hyponym"

        def scorer(w1, w2):
            i1, i2 = vocab.get(w1), vocab.get(w2)
            if i1 is None or i2 is None:
                return None
            src, dst = (i1, i2) if source_first else (i2, i1)
            return -cmd(src, dst, hist, space, lam=cfg.lam, iters=cfg.iters,
                        cost_mode=cfg.cost_mode, clip=cfg.clip)

        datasets = [load_hypernymy_file(f) for f in sorted(path.glob("*.tsv"))]
        val = load_hypernymy_file(validation) if validation else None
        report = run_hypernymy(datasets, scorer, validation=val)
        out = {row["dataset"]: row.get("value") for row in report.rows}
        out["weighted_average"] = report.weighted_average
        return out

    raise BadParameter(f"unknown task {task!r}; expected sts, wordsim, or hypernymy")
