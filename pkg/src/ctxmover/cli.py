"""Command-line front end.

One binary, subcommand per pipeline stage:

    vocab -> cooc -> sppmi -> cluster -> histograms

then scoring (`dist`, `comb`, `neighbors`) and evaluation (`eval-sts`,
`eval-hyp`, `eval-ws`), plus `selftest`.  Stage commands read the artifacts
of earlier stages; every file-producing run echoes its fully-resolved
configuration next to its outputs.

Exit codes: 0 success, 1 usage error, 2 missing/invalid files, 3 numerical
failure.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

from .config import RunConfig
from .errors import (
    BadClustering,
    BadInput,
    BadParameter,
    CtxMoverError,
    DegenerateCost,
    DegenerateInput,
    DegenerateMetric,
    EmptyCorpus,
    EmptySentence,
    FormatError,
    IoError,
    NumericalOverflow,
    OovError,
    OracleSizeLimit,
    ShapeError,
    ZeroMassWord,
)

_USAGE_ERRORS = (BadParameter, OovError, EmptySentence, BadInput, ShapeError,
                 BadClustering, OracleSizeLimit)
_IO_ERRORS = (IoError, FormatError, EmptyCorpus, FileNotFoundError, PermissionError)
_NUMERIC_ERRORS = (NumericalOverflow, DegenerateMetric, DegenerateCost,
                   DegenerateInput, ZeroMassWord)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        sys.exit(1)


def _add_common(sub):
    sub.add_argument("--config", help="key=value config file; flags override it")
    sub.add_argument("--threads", type=int,
                     help="cap BLAS/worker threads (default: all cores)")


def _add_scoring_flags(sub):
    sub.add_argument("--vocab", help="vocabulary TSV")
    sub.add_argument("--hist", help="histogram store")
    sub.add_argument("--clusters-file", help="clustering artifact")
    sub.add_argument("--embeddings", help="GloVe-style point vectors")
    sub.add_argument("--entail-vectors", dest="entail_vectors",
                     help="entailment vectors (same text format)")
    sub.add_argument("--metric", choices=["euclidean", "angular", "entailment"])
    sub.add_argument("--p", type=int, choices=[1, 2])
    sub.add_argument("--lam", "--lambda", dest="lam", type=float,
                     help="entropy regularization weight")
    sub.add_argument("--iters", type=int, help="Sinkhorn/barycenter sweeps")
    sub.add_argument("--mixing", type=float, help="point-estimate mixing weight m")
    sub.add_argument("--pc-removal", dest="pc_removal", action="store_true",
                     default=None, help="remove the point table's first principal component")
    sub.add_argument("--no-pc-removal", dest="pc_removal", action="store_false",
                     default=None)
    sub.add_argument("--cost-mode", dest="cost_mode", choices=["none", "median", "log"])
    sub.add_argument("--clip", type=float, help="cap ground costs at this value")
    sub.add_argument("--entail-direction", dest="entail_direction",
                     choices=["source-hyponym", "source-hypernym"])
    sub.add_argument("--seed", type=int)


def build_parser():
    from . import __version__

    parser = _Parser(prog="ctxmover",
                     description="context-histogram representations scored with "
                                 "entropic optimal transport")
    parser.add_argument("--version", action="version",
                        version=f"%(prog)s {__version__}")
    commands = parser.add_subparsers(dest="command", required=True)

    p = commands.add_parser("vocab", parents=[], help="build the vocabulary")
    _add_common(p)
    p.add_argument("--corpus", help="tokenized corpus, one sentence per line")
    p.add_argument("--min-count", dest="min_count", type=int)
    p.add_argument("-o", "--out", required=True)

    p = commands.add_parser("cooc", help="accumulate windowed co-occurrences")
    _add_common(p)
    p.add_argument("--corpus")
    p.add_argument("--vocab")
    p.add_argument("--window", type=int)
    p.add_argument("--unweighted", dest="weighted_window", action="store_false",
                   default=None, help="count 1 per pair instead of 1/distance")
    p.add_argument("-o", "--out", required=True)

    p = commands.add_parser("sppmi", help="smoothed shifted positive PMI")
    _add_common(p)
    p.add_argument("--cooc")
    p.add_argument("--alpha", type=float)
    p.add_argument("--shift", type=float)
    p.add_argument("-o", "--out", required=True)

    p = commands.add_parser("cluster", help="cluster context embeddings")
    _add_common(p)
    p.add_argument("--vocab")
    p.add_argument("--embeddings")
    p.add_argument("--context-embeddings", dest="context_embeddings",
                   help="separate context-vector file (default: --embeddings)")
    p.add_argument("--clusters", type=int, help="number of representative contexts K")
    p.add_argument("--seed", type=int)
    p.add_argument("--kmeans-iters", dest="kmeans_iters", type=int)
    p.add_argument("--metric", choices=["euclidean", "angular", "entailment"])
    p.add_argument("--identity", action="store_true",
                   help="one cluster per context (exact, for small vocabularies)")
    p.add_argument("-o", "--out", required=True)

    p = commands.add_parser("histograms", help="aggregate mass and build the store")
    _add_common(p)
    p.add_argument("--sppmi")
    p.add_argument("--clusters-file")
    p.add_argument("--beta", type=float)
    p.add_argument("--table-out", help="also save the clustered mass table")
    p.add_argument("-o", "--out", required=True)

    p = commands.add_parser("dist", help="transport distance between two words")
    _add_common(p)
    _add_scoring_flags(p)
    p.add_argument("--precision", type=int, default=6)
    p.add_argument("word1")
    p.add_argument("word2")

    p = commands.add_parser("comb", help="barycenter histogram of a sentence")
    _add_common(p)
    _add_scoring_flags(p)
    p.add_argument("-o", "--out", help="write TSV here instead of stdout")
    p.add_argument("words", nargs="+")

    p = commands.add_parser("neighbors", help="nearest words to a word or sentence")
    _add_common(p)
    _add_scoring_flags(p)
    p.add_argument("-k", type=int, default=10)
    p.add_argument("--sentence", action="store_true",
                   help="treat the positional words as one sentence query")
    p.add_argument("words", nargs="+")

    for name, datahelp in (
        ("eval-sts", "directory of group subdirectories with sentence-pair TSVs"),
        ("eval-hyp", "directory of word-pair TSVs with hyper/other labels"),
        ("eval-ws", "directory of word-pair TSVs with similarity scores"),
    ):
        p = commands.add_parser(name, help=f"run the {name.split('-')[1]} harness")
        _add_common(p)
        _add_scoring_flags(p)
        p.add_argument("--data", required=True, help=datahelp)
        p.add_argument("--out-dir", dest="out_dir", required=True)
        if name == "eval-hyp":
            p.add_argument("--validation", help="validation TSV for threshold tuning")

    p = commands.add_parser("selftest", help="run built-in oracle checks")
    _add_common(p)

    return parser


def _resolve_config(args) -> RunConfig:
    cfg = RunConfig.load(args.config) if getattr(args, "config", None) else RunConfig()
    flag_keys = [f for f in vars(cfg) if not f.startswith("_")]
    flags = {k: getattr(args, k) for k in flag_keys if hasattr(args, k)}
    return cfg.override(**flags)


def _echo_config(cfg: RunConfig, out_path):
    out_path = Path(out_path)
    cfg.save(out_path.with_name(out_path.name + ".cfg"))


def _require(cfg, args, *keys):
    for key in keys:
        if getattr(cfg, key, None) in (None, ""):
            raise BadParameter(f"missing required input --{key.replace('_', '-')}")


# ---------------------------------------------------------------------------
# stage commands
# ---------------------------------------------------------------------------

def _cmd_vocab(args, cfg):
    from .corpus import build_vocabulary, read_corpus

    _require(cfg, args, "corpus")
    vocab = build_vocabulary(read_corpus(cfg.corpus), min_count=cfg.min_count)
    vocab.save(args.out)
    _echo_config(cfg, args.out)
    print(f"vocab: {len(vocab)} tokens -> {args.out}")
    return 0


def _cmd_cooc(args, cfg):
    from .corpus import Vocabulary, accumulate_cooccurrences, read_corpus, save_cooc

    _require(cfg, args, "corpus", "vocab")
    vocab = Vocabulary.load(cfg.vocab)
    matrix = accumulate_cooccurrences(read_corpus(cfg.corpus), vocab,
                                      window=cfg.window, weighted=cfg.weighted_window)
    save_cooc(matrix, args.out)
    _echo_config(cfg, args.out)
    print(f"cooc: {len(matrix.entries)} entries (window {cfg.window}) -> {args.out}")
    return 0


def _cmd_sppmi(args, cfg):
    from .corpus import load_cooc
    from .ppmi import compute_sppmi, save_sppmi

    _require(cfg, args, "cooc")
    matrix = compute_sppmi(load_cooc(cfg.cooc), alpha=cfg.alpha, shift=cfg.shift)
    save_sppmi(matrix, args.out)
    _echo_config(cfg, args.out)
    print(f"sppmi: {len(matrix.entries)} entries "
          f"(alpha {cfg.alpha}, shift {cfg.shift}) -> {args.out}")
    return 0


def _cmd_cluster(args, cfg):
    from .clustering import ContextClustering, kmeans, load_embeddings
    from .corpus import Vocabulary

    _require(cfg, args, "vocab")
    vec_path = cfg.context_embeddings or cfg.embeddings
    if not vec_path:
        raise BadParameter("missing required input --embeddings")
    vocab = Vocabulary.load(cfg.vocab)
    table = load_embeddings(vec_path, vocab)
    metric = "euclidean" if cfg.metric == "entailment" else cfg.metric
    if args.identity:
        clustering = ContextClustering.identity(table, metric_tag=metric)
    else:
        clustering = kmeans(table, K=cfg.clusters, seed=cfg.seed,
                            max_iters=cfg.kmeans_iters, metric_tag=metric)
    clustering.save(args.out)
    _echo_config(cfg, args.out)
    print(f"cluster: K={clustering.n_clusters} over {len(vocab)} contexts -> {args.out}")
    return 0


def _cmd_histograms(args, cfg):
    from .clustering import ContextClustering, aggregate_sppmi, column_normalize
    from .estimates import HistogramStore
    from .ppmi import load_sppmi

    _require(cfg, args, "sppmi", "clusters_file")
    sppmi = load_sppmi(cfg.sppmi)
    clustering = ContextClustering.load(cfg.clusters_file)
    clustered = column_normalize(aggregate_sppmi(sppmi, clustering), beta=cfg.beta)
    if args.table_out:
        clustered.save(args.table_out)
    store = HistogramStore.from_clustered(clustered)
    store.save(args.out)
    _echo_config(cfg, args.out)
    print(f"histograms: {len(store)} words x {store.n_clusters} atoms -> {args.out}")
    return 0


# ---------------------------------------------------------------------------
# scoring commands
# ---------------------------------------------------------------------------

def _load_scoring_context(cfg):
    from .clustering import ContextClustering, load_embeddings
    from .corpus import Vocabulary
    from .distance import GroundSpace
    from .estimates import HistogramStore, PointEstimateTable, remove_pc

    vocab = Vocabulary.load(cfg.vocab)
    store = HistogramStore.load(cfg.hist, mixing=cfg.mixing)
    clustering = ContextClustering.load(cfg.clusters_file)
    if store.n_clusters != clustering.n_clusters:
        raise BadClustering(
            f"histogram store was built with K={store.n_clusters} but the "
            f"clustering has K={clustering.n_clusters}")
    vec_path = cfg.entail_vectors if cfg.metric == "entailment" else cfg.embeddings
    if not vec_path:
        flag = "--entail-vectors" if cfg.metric == "entailment" else "--embeddings"
        raise BadParameter(f"missing required input {flag}")
    points = PointEstimateTable(load_embeddings(vec_path, vocab).vectors)
    if cfg.pc_removal:
        points = remove_pc(points, seed=cfg.seed)
    space = GroundSpace.assemble(clustering.centroids, points.vectors,
                                 metric=cfg.metric, p=cfg.p)
    return vocab, store, space


def _word_id(vocab, token):
    wid = vocab.get(token)
    if wid is None:
        raise OovError(f"word {token!r} not in vocabulary")
    return wid


def _cmd_dist(args, cfg):
    from .distance import cmd as word_cmd

    _require(cfg, args, "vocab", "hist", "clusters_file")
    vocab, store, space = _load_scoring_context(cfg)
    value = word_cmd(_word_id(vocab, args.word1), _word_id(vocab, args.word2),
                     store, space, lam=cfg.lam, iters=cfg.iters,
                     cost_mode=cfg.cost_mode, clip=cfg.clip)
    print(f"{value:.{args.precision}f}")
    return 0


def _cmd_comb(args, cfg):
    from .distance import comb as sentence_comb

    _require(cfg, args, "vocab", "hist", "clusters_file")
    vocab, store, space = _load_scoring_context(cfg)
    ids = [wid for wid in (vocab.get(w) for w in args.words) if wid is not None]
    if not ids:
        raise EmptySentence("every word of the sentence is out of vocabulary")
    est = sentence_comb(ids, store, space, lam=cfg.lam, iters=cfg.iters,
                        cost_mode=cfg.cost_mode, clip=cfg.clip)
    lines = [f"{atom}\t{w:.9g}" for atom, w in zip(est.support, est.weights)]
    body = "\n".join(lines) + "\n"
    if args.out:
        Path(args.out).write_text(body, encoding="utf-8")
        _echo_config(cfg, args.out)
        print(f"comb: {est.support.size} atoms -> {args.out}")
    else:
        sys.stdout.write(body)
    return 0


def _cmd_neighbors(args, cfg):
    from .distance import comb as sentence_comb
    from .distance import nearest_neighbors

    _require(cfg, args, "vocab", "hist", "clusters_file")
    vocab, store, space = _load_scoring_context(cfg)
    if args.sentence:
        ids = [wid for wid in (vocab.get(w) for w in args.words) if wid is not None]
        if not ids:
            raise EmptySentence("every word of the sentence is out of vocabulary")
        query = sentence_comb(ids, store, space, lam=cfg.lam, iters=cfg.iters,
                              cost_mode=cfg.cost_mode, clip=cfg.clip)
        exclude = set()
    else:
        if len(args.words) != 1:
            raise BadParameter("word query takes exactly one word (or use --sentence)")
        query = _word_id(vocab, args.words[0])
        exclude = {query}
    candidates = [wid for wid in range(len(vocab)) if wid not in exclude]
    ranked = nearest_neighbors(query, candidates, k=min(args.k, len(candidates)),
                               store=store, space=space, lam=cfg.lam,
                               iters=cfg.iters, cost_mode=cfg.cost_mode, clip=cfg.clip)
    for rank, (wid, dist) in enumerate(ranked, 1):
        print(f"{rank}\t{vocab.tokens[wid]}\t{dist:.6f}")
    return 0


# ---------------------------------------------------------------------------
# evaluation commands
# ---------------------------------------------------------------------------

def _sts_datasets(data_dir):
    from .evaluation import load_sts_file

    data_dir = Path(data_dir)
    if not data_dir.is_dir():
        raise IoError(f"dataset directory not found: {data_dir}")
    groups = sorted(p for p in data_dir.iterdir() if p.is_dir())
    datasets = []
    if groups:
        for group_dir in groups:
            for path in sorted(group_dir.glob("*.tsv")):
                datasets.append(load_sts_file(path, group=group_dir.name))
    else:
        for path in sorted(data_dir.glob("*.tsv")):
            datasets.append(load_sts_file(path, group=data_dir.name))
    if not datasets:
        raise IoError(f"no .tsv dataset files under {data_dir}")
    return datasets


def _flat_datasets(data_dir, loader):
    data_dir = Path(data_dir)
    if not data_dir.is_dir():
        raise IoError(f"dataset directory not found: {data_dir}")
    datasets = [loader(path) for path in sorted(data_dir.glob("*.tsv"))]
    if not datasets:
        raise IoError(f"no .tsv dataset files under {data_dir}")
    return datasets


def _cmd_eval_sts(args, cfg):
    from .distance import sentence_cmd
    from .evaluation import run_sts, write_summary, write_tsv_report
    from .figures import bar_chart

    _require(cfg, args, "vocab", "hist", "clusters_file")
    vocab, store, space = _load_scoring_context(cfg)

    def scorer(tokens1, tokens2):
        ids1 = [wid for wid in (vocab.get(t) for t in tokens1) if wid is not None]
        ids2 = [wid for wid in (vocab.get(t) for t in tokens2) if wid is not None]
        if not ids1 or not ids2:
            raise EmptySentence("sentence fully out of vocabulary")
        return sentence_cmd(ids1, ids2, store, space, lam=cfg.lam, iters=cfg.iters,
                            cost_mode=cfg.cost_mode, clip=cfg.clip)

    report = run_sts(_sts_datasets(args.data), scorer)

    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rows = [[fs.group, fs.name, _fmt(fs.value), fs.n_pairs, fs.n_skipped, fs.error]
            for fs in report.files]
    write_tsv_report(out / "sts_report.tsv",
                     ["group", "dataset", "pearson", "pairs", "oov_pairs", "error"], rows)
    summary = {f"pearson.{g}": f"{v:.6f}" for g, v in report.per_group.items()}
    summary["pearson.average"] = "" if report.average is None else f"{report.average:.6f}"
    summary["files"] = str(len(report.files))
    write_summary(out / "sts_summary.txt", summary)
    bar_chart([f"{fs.group}/{fs.name}" for fs in report.files],
              [fs.value for fs in report.files],
              out / "sts_scores.png", title="Sentence similarity",
              ylabel="Pearson r")
    cfg.save(out / "run_config.cfg")
    for fs in report.files:
        print(f"{fs.group}/{fs.name}: "
              + (f"pearson={fs.value:.4f}" if fs.value is not None else f"error={fs.error}"))
    if report.average is not None:
        print(f"average: {report.average:.4f}")
    return 0


def _hyp_score_fn(vocab, store, space, cfg):
    from .distance import cmd as word_cmd

    source_first = cfg.entail_direction == "source-hyponym"

    def scorer(w1, w2):
        i1, i2 = vocab.get(w1), vocab.get(w2)
        if i1 is None or i2 is None:
            return None
        src, dst = (i1, i2) if source_first else (i2, i1)
        return -word_cmd(src, dst, store, space, lam=cfg.lam, iters=cfg.iters,
                         cost_mode=cfg.cost_mode, clip=cfg.clip)

    return scorer


def _cmd_eval_hyp(args, cfg):
    from .evaluation import load_hypernymy_file, run_hypernymy

    cfg.apply_task_defaults(metric="entailment", iters=500, cost_mode="log",
                            mixing=0.0)
    _require(cfg, args, "vocab", "hist", "clusters_file")
    vocab, store, space = _load_scoring_context(cfg)
    scorer = _hyp_score_fn(vocab, store, space, cfg)
    validation = load_hypernymy_file(args.validation) if args.validation else None
    report = run_hypernymy(_flat_datasets(args.data, load_hypernymy_file),
                           scorer, validation=validation)
    _write_task_report(report, args.out_dir, cfg, task="hypernymy",
                       value_label="score", title="Hypernymy detection")
    return 0


def _cmd_eval_ws(args, cfg):
    from .distance import cmd as word_cmd
    from .evaluation import load_wordsim_file, run_wordsim

    cfg.apply_task_defaults(mixing=0.8)
    _require(cfg, args, "vocab", "hist", "clusters_file")
    vocab, store, space = _load_scoring_context(cfg)

    def scorer(w1, w2):
        i1, i2 = vocab.get(w1), vocab.get(w2)
        if i1 is None or i2 is None:
            return None
        return word_cmd(i1, i2, store, space, lam=cfg.lam, iters=cfg.iters,
                        cost_mode=cfg.cost_mode, clip=cfg.clip)

    report = run_wordsim(_flat_datasets(args.data, load_wordsim_file), scorer)
    _write_task_report(report, args.out_dir, cfg, task="wordsim",
                       value_label="spearman", title="Word similarity")
    return 0


def _fmt(value):
    return None if value is None else f"{value:.6f}"


def _write_task_report(report, out_dir, cfg, task, value_label, title):
    from .evaluation import write_summary, write_tsv_report
    from .figures import bar_chart

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rows = []
    for row in report.rows:
        rows.append([row["dataset"], row.get("metric", value_label),
                     _fmt(row.get("value")), row["pairs"], row["oov"],
                     row.get("error", "")])
    write_tsv_report(out / f"{task}_report.tsv",
                     ["dataset", "metric", "value", "pairs", "oov_pairs", "error"],
                     rows)
    summary = {}
    for row in report.rows:
        summary[f"{row.get('metric', value_label)}.{row['dataset']}"] = (
            "" if row.get("value") is None else f"{row['value']:.6f}")
    wavg = report.weighted_average
    summary["weighted_average"] = "" if wavg is None else f"{wavg:.6f}"
    write_summary(out / f"{task}_summary.txt", summary)
    bar_chart([row["dataset"] for row in report.rows],
              [row.get("value") for row in report.rows],
              out / f"{task}_scores.png", title=title, ylabel=value_label)
    cfg.save(out / "run_config.cfg")
    for row in report.rows:
        value = row.get("value")
        shown = f"{value:.4f}" if value is not None else f"error={row.get('error', '')}"
        print(f"{row['dataset']}: {row.get('metric', value_label)}={shown}")
    if wavg is not None:
        print(f"weighted average: {wavg:.4f}")


def _cmd_selftest(args, cfg):
    from .selftest import run_selftest

    return 0 if run_selftest() else 3


_COMMANDS = {
    "vocab": _cmd_vocab,
    "cooc": _cmd_cooc,
    "sppmi": _cmd_sppmi,
    "cluster": _cmd_cluster,
    "histograms": _cmd_histograms,
    "dist": _cmd_dist,
    "comb": _cmd_comb,
    "neighbors": _cmd_neighbors,
    "eval-sts": _cmd_eval_sts,
    "eval-hyp": _cmd_eval_hyp,
    "eval-ws": _cmd_eval_ws,
    "selftest": _cmd_selftest,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    threads = getattr(args, "threads", None)
    if threads:
        # must land before the numerical stack loads; submodules import lazily
        for var in ("OPENBLAS_NUM_THREADS", "OMP_NUM_THREADS", "MKL_NUM_THREADS"):
            os.environ[var] = str(threads)
    try:
        cfg = _resolve_config(args)
        return _COMMANDS[args.command](args, cfg)
    except _USAGE_ERRORS as exc:
        print(f"ctxmover {args.command}: {exc}", file=sys.stderr)
        return 1
    except _IO_ERRORS as exc:
        print(f"ctxmover {args.command}: {exc}", file=sys.stderr)
        return 2
    except _NUMERIC_ERRORS as exc:
        print(f"ctxmover {args.command}: numerical failure: {exc}", file=sys.stderr)
        return 3
    except CtxMoverError as exc:
        print(f"ctxmover {args.command}: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
