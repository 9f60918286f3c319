"""Built-in oracle checks runnable from an installed package.

Each check recomputes a known-good value through an independent route (hand
arithmetic, the exact LP solver, a brute-force loop) and compares.  The CLI
`selftest` subcommand prints one line per check and exits nonzero if any
fails.
"""

from __future__ import annotations

import tempfile
from pathlib import Path

import numpy as np


def _checks():
    from .corpus import accumulate_cooccurrences, build_vocabulary, load_cooc, save_cooc
    from .clustering import ClusteredSppmi, ContextClustering, EmbeddingTable, aggregate_sppmi
    from .distance import entailment_cost
    from .estimates import HistogramStore
    from .evaluation import average_precision_at_all, pearson, spearman
    from .ot import barycenter, exact_ot, sinkhorn
    from .ppmi import compute_sppmi

    def check_cooc_hand_trace():
        vocab = build_vocabulary(["a", "b", "a"])
        mat = accumulate_cooccurrences(["a", "b", "a"], vocab, window=2)
        assert mat.entries == {(0, 1): 2.0, (1, 0): 2.0, (0, 0): 1.0}

    def check_cooc_roundtrip():
        vocab = build_vocabulary(["a", "b", "a"])
        mat = accumulate_cooccurrences(["a", "b", "a"], vocab, window=2)
        with tempfile.TemporaryDirectory() as tmp:
            save_cooc(mat, Path(tmp) / "c.bin")
            assert load_cooc(Path(tmp) / "c.bin") == mat

    def check_sppmi_hand_value():
        vocab = build_vocabulary(["a", "b", "a"])
        cooc = accumulate_cooccurrences(["a", "b", "a"], vocab, window=2)
        sppmi = compute_sppmi(cooc, alpha=1.0, shift=1.0)
        expected = np.log(5.0 / 3.0)
        assert abs(sppmi.entries[(0, 1)] - expected) < 1e-12
        assert abs(sppmi.entries[(1, 0)] - expected) < 1e-12
        assert (0, 0) not in sppmi.entries

    def check_pipeline_histogram():
        vocab = build_vocabulary(["a", "b", "a"])
        cooc = accumulate_cooccurrences(["a", "b", "a"], vocab, window=2)
        sppmi = compute_sppmi(cooc, alpha=1.0, shift=1.0)
        clus = ContextClustering.identity(EmbeddingTable(np.eye(2)))
        store = HistogramStore.from_clustered(aggregate_sppmi(sppmi, clus))
        est = store.estimate(0)
        assert est.support.tolist() == [1] and abs(est.weights[0] - 1.0) < 1e-12

    def check_sinkhorn_tracks_exact():
        rng = np.random.default_rng(7)
        for _ in range(20):
            n, m = rng.integers(2, 7, size=2)
            a = rng.random(n) + 0.05
            a /= a.sum()
            b = rng.random(m) + 0.05
            b /= b.sum()
            M = rng.random((n, m))
            exact = exact_ot(a, b, M).cost
            approx = sinkhorn(a, b, M, lam=1e-3, iters=5000).cost
            assert abs(approx - exact) <= 1e-2

    def check_barycenter_midpoint():
        grid = np.array([0.0, 0.5, 1.0])
        M = np.abs(grid[:, None] - grid[None, :]) ** 2
        out = barycenter([np.array([1.0, 0.0, 0.0]), np.array([0.0, 0.0, 1.0])],
                         [0.5, 0.5], M, lam=1e-3, iters=500)
        assert out[1] >= 0.95

    def check_entailment_hand_values():
        assert abs(entailment_cost([0.0], [0.0]) - 0.3466) < 1e-3
        assert abs(entailment_cost([2.0], [0.0]) - 0.0826) < 1e-3
        assert abs(entailment_cost([0.0], [2.0]) - 1.0635) < 1e-3

    def check_metric_hand_values():
        assert abs(average_precision_at_all([3, 2, 1], [True, False, True]) - 5.0 / 6.0) < 1e-12
        assert abs(pearson([1, 2, 3, 4], [1, 3, 2, 4]) - 0.8) < 1e-9
        assert abs(spearman([1, 2, 3], [1, 1, 2]) - 0.8660254037844387) < 1e-9

    return [
        ("cooc hand trace", check_cooc_hand_trace),
        ("cooc binary round trip", check_cooc_roundtrip),
        ("sppmi hand value", check_sppmi_hand_value),
        ("pipeline histogram trace", check_pipeline_histogram),
        ("sinkhorn vs exact LP", check_sinkhorn_tracks_exact),
        ("barycenter midpoint", check_barycenter_midpoint),
        ("entailment hand values", check_entailment_hand_values),
        ("metric hand values", check_metric_hand_values),
    ]


def run_selftest() -> bool:
    ok = True
    for name, fn in _checks():
        try:
            fn()
        except Exception as exc:  # report every failure, keep going
            ok = False
            print(f"FAIL {name}: {exc}")
        else:
            print(f"ok   {name}")
    return ok
