"""Histogram-over-contexts representations compared with entropic transport.

The package turns a tokenized corpus into per-word probability histograms
over clustered context embeddings, scores word and sentence pairs with
regularized optimal transport, summarizes sentences as Wasserstein
barycenters, and ships the evaluation harnesses for similarity and
hypernymy benchmarks.

Submodules import lazily so the command-line front end can configure
threading before any numerical library loads.
"""

import importlib

__version__ = "0.1.0"

_EXPORTS = {
    # corpus
    "Vocabulary": "corpus",
    "SparseCoocMatrix": "corpus",
    "build_vocabulary": "corpus",
    "accumulate_cooccurrences": "corpus",
    "save_cooc": "corpus",
    "load_cooc": "corpus",
    "read_corpus": "corpus",
    # ppmi
    "SppmiMatrix": "ppmi",
    "compute_sppmi": "ppmi",
    "sppmi_row": "ppmi",
    "save_sppmi": "ppmi",
    "load_sppmi": "ppmi",
    # clustering
    "EmbeddingTable": "clustering",
    "ContextClustering": "clustering",
    "ClusteredSppmi": "clustering",
    "kmeans": "clustering",
    "aggregate_sppmi": "clustering",
    "column_normalize": "clustering",
    "load_embeddings": "clustering",
    # estimates
    "DistributionalEstimate": "estimates",
    "PointEstimateTable": "estimates",
    "HistogramStore": "estimates",
    "build_estimate": "estimates",
    "mix_estimate": "estimates",
    "remove_pc": "estimates",
    # transport kernels
    "CostMatrix": "ot",
    "TransportPlan": "ot",
    "exact_ot": "ot",
    "sinkhorn": "ot",
    "sinkhorn_batch": "ot",
    "barycenter": "ot",
    "barycenter_batch": "ot",
    "preprocess_cost": "ot",
    # scoring
    "GroundSpace": "distance",
    "SentenceEstimate": "distance",
    "ground_cost": "distance",
    "entailment_cost": "distance",
    "cmd": "distance",
    "comb": "distance",
    "sentence_cmd": "distance",
    "nearest_neighbors": "distance",
    # evaluation
    "PairDataset": "evaluation",
    "pearson": "evaluation",
    "spearman": "evaluation",
    "average_precision_at_all": "evaluation",
    "detection_accuracy": "evaluation",
    "run_sts": "evaluation",
    "run_wordsim": "evaluation",
    "run_hypernymy": "evaluation",
    # config
    "RunConfig": "config",
}

_SUBMODULES = frozenset({
    "cli", "clustering", "config", "corpus", "distance", "errors",
    "estimates", "evaluation", "figures", "ot", "ppmi", "selftest",
})

__all__ = sorted(_EXPORTS) + ["__version__"]


def __getattr__(name):
    if name in _SUBMODULES:
        module = importlib.import_module(f".{name}", __name__)
        globals()[name] = module
        return module
    submodule = _EXPORTS.get(name)
    if submodule is None:
        raise AttributeError(f"module {__name__!r} has no attribute {name!r}")
    value = getattr(importlib.import_module(f".{submodule}", __name__), name)
    globals()[name] = value
    return value
