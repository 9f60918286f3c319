"""Per-word histograms over representative contexts.

A word's estimate is its (normalized) row of the clustered mass table: a
probability histogram whose atoms are cluster centroids.  Two refinements are
supported:

* mixing: a share ``m`` of the mass moves to an extra atom placed at the
  word's own point embedding (atom ids ``K + word_id`` address these),
* principal-component removal on the point-embedding table, which strips the
  shared dominant direction before those vectors are used as atoms.

Words whose table row is entirely zero cannot be normalized; the store falls
back to a unit mass on the word's own point atom.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .clustering import ClusteredSppmi
from .corpus import _read_exact
from .errors import (
    BadInput,
    BadParameter,
    DegenerateInput,
    FormatError,
    IoError,
    OovError,
    ZeroMassWord,
)

HIST_MAGIC = b"CMVHIST1"


@dataclass(frozen=True)
class DistributionalEstimate:
    """Histogram over ground-space atoms: cluster ids, plus optionally the
    owner's point atom (id ``own_atom = K + owner``)."""

    support: np.ndarray
    weights: np.ndarray
    owner: int
    own_atom: int

    def __post_init__(self):
        sup = np.asarray(self.support, dtype=np.int64)
        w = np.asarray(self.weights, dtype=np.float64)
        if sup.shape != w.shape or sup.ndim != 1:
            raise BadInput("support and weights must be 1-D and same length")
        if sup.size == 0:
            raise BadInput("estimate has empty support")
        if np.unique(sup).size != sup.size:
            raise BadInput("support ids must be unique")
        if np.any(w < 0) or abs(w.sum() - 1.0) > 1e-9:
            raise BadInput("weights must be non-negative and sum to 1")
        object.__setattr__(self, "support", sup)
        object.__setattr__(self, "weights", w)


def build_estimate(word_id: int, clustered: ClusteredSppmi) -> DistributionalEstimate:
    """Normalize a word's clustered-mass row into a histogram."""
    V, K = clustered.shape
    if not 0 <= word_id < V:
        raise IndexError(f"word id {word_id} outside table of {V} rows")
    row = clustered.table[word_id]
    support = np.flatnonzero(row > 0)
    if support.size == 0:
        raise ZeroMassWord(f"word {word_id} has no association mass")
    weights = row[support] / row[support].sum()
    return DistributionalEstimate(support=support, weights=weights,
                                  owner=word_id, own_atom=K + word_id)


def mix_estimate(estimate: DistributionalEstimate, m: float) -> DistributionalEstimate:
    """Blend in the owner's point atom with weight ``m``.

    Existing weights are scaled by ``1 - m``; ``m=0`` returns the estimate
    unchanged and ``m=1`` collapses it to a unit mass on the point atom.
    """
    if not 0.0 <= m <= 1.0:
        raise BadParameter(f"mixing weight must lie in [0, 1], got {m}")
    if m == 0.0:
        return estimate
    if estimate.own_atom in estimate.support:
        raise BadInput("estimate already carries its own point atom")
    if m == 1.0:
        return DistributionalEstimate(
            support=np.array([estimate.own_atom]), weights=np.array([1.0]),
            owner=estimate.owner, own_atom=estimate.own_atom)
    support = np.concatenate([estimate.support, [estimate.own_atom]])
    weights = np.concatenate([estimate.weights * (1.0 - m), [m]])
    return DistributionalEstimate(support=support, weights=weights,
                                  owner=estimate.owner, own_atom=estimate.own_atom)


@dataclass
class PointEstimateTable:
    """Word point embeddings, with the removed principal direction if any."""

    vectors: np.ndarray
    pc: np.ndarray | None = None

    def __post_init__(self):
        v = np.asarray(self.vectors, dtype=np.float64)
        if v.ndim != 2:
            raise BadInput(f"point table must be 2-D, got shape {v.shape}")
        if not np.all(np.isfinite(v)):
            raise BadInput("point table contains non-finite values")
        self.vectors = v
        if self.pc is not None:
            u = np.asarray(self.pc, dtype=np.float64)
            if abs(np.linalg.norm(u) - 1.0) > 1e-12:
                raise BadInput("stored principal component must be unit norm")
            self.pc = u


def _top_direction(X: np.ndarray, seed: int, tol: float = 1e-9,
                   max_iters: int = 10000) -> np.ndarray:
    """Dominant right-singular direction of X via seeded power iteration."""
    G = X.T @ X
    gen = np.random.default_rng(seed)
    u = gen.standard_normal(G.shape[0])
    u /= np.linalg.norm(u)
    prev = 0.0
    for _ in range(max_iters):
        w = G @ u
        norm = np.linalg.norm(w)
        if norm < 1e-300:
            u = gen.standard_normal(G.shape[0])
            u /= np.linalg.norm(u)
            continue
        u = w / norm
        ev = float(u @ G @ u)
        if abs(ev - prev) <= tol * abs(ev):
            break
        prev = ev
    # deterministic sign: largest-magnitude component points up
    k = int(np.argmax(np.abs(u)))
    if u[k] < 0:
        u = -u
    return u


def remove_pc(points: PointEstimateTable, seed: int = 0) -> PointEstimateTable:
    """Subtract every vector's projection on the table's first principal
    component (of the uncentered vector set, as in SIF-style pipelines)."""
    X = points.vectors
    if X.shape[0] < 2:
        raise DegenerateInput("need at least 2 vectors to estimate a principal component")
    if not np.any(X):
        raise DegenerateInput("point table is identically zero")
    u = _top_direction(X, seed=seed)
    cleaned = X - np.outer(X @ u, u)
    return PointEstimateTable(vectors=cleaned, pc=u)


class HistogramStore:
    """All per-word estimates of a vocabulary, with an optional default
    mixing weight applied on access.  Immutable after construction; safe for
    concurrent readers."""

    def __init__(self, estimates: list[DistributionalEstimate], n_clusters: int,
                 mixing: float = 0.0):
        if not 0.0 <= mixing <= 1.0:
            raise BadParameter(f"mixing weight must lie in [0, 1], got {mixing}")
        self._estimates = estimates
        self.n_clusters = n_clusters
        self.mixing = mixing

    def __len__(self):
        return len(self._estimates)

    @property
    def vocab_size(self):
        return len(self._estimates)

    @classmethod
    def from_clustered(cls, clustered: ClusteredSppmi, mixing: float = 0.0):
        """Build every word's estimate; zero-mass rows become point Diracs."""
        V, K = clustered.shape
        estimates = []
        for wid in range(V):
            try:
                est = build_estimate(wid, clustered)
            except ZeroMassWord:
                est = DistributionalEstimate(
                    support=np.array([K + wid]), weights=np.array([1.0]),
                    owner=wid, own_atom=K + wid)
            estimates.append(est)
        return cls(estimates, n_clusters=K, mixing=mixing)

    def base_estimate(self, word_id: int) -> DistributionalEstimate:
        if not 0 <= word_id < len(self._estimates):
            raise OovError(f"word id {word_id} outside store of {len(self._estimates)} words")
        return self._estimates[word_id]

    def estimate(self, word_id: int) -> DistributionalEstimate:
        """The word's histogram with the store's mixing weight applied."""
        est = self.base_estimate(word_id)
        if self.mixing and est.support.size == 1 and est.support[0] == est.own_atom:
            return est  # fallback Dirac is already pure point mass
        return mix_estimate(est, self.mixing) if self.mixing else est

    def with_mixing(self, mixing: float) -> "HistogramStore":
        return HistogramStore(self._estimates, self.n_clusters, mixing=mixing)

    def save(self, path):
        with open(path, "wb") as fh:
            fh.write(HIST_MAGIC)
            fh.write(struct.pack("<II", len(self._estimates), self.n_clusters))
            for est in self._estimates:
                fh.write(struct.pack("<II", est.owner, est.support.size))
                rec = np.empty(est.support.size,
                               dtype=np.dtype([("a", "<u4"), ("w", "<f4")]))
                rec["a"] = est.support
                rec["w"] = est.weights
                fh.write(rec.tobytes())

    @classmethod
    def load(cls, path, mixing: float = 0.0):
        path = Path(path)
        if not path.exists():
            raise IoError(f"histogram store not found: {path} (run the 'histograms' stage first)")
        dt = np.dtype([("a", "<u4"), ("w", "<f4")])
        with open(path, "rb") as fh:
            magic = fh.read(len(HIST_MAGIC))
            if magic != HIST_MAGIC:
                raise FormatError(f"{path}: bad magic {magic!r}, expected {HIST_MAGIC!r}")
            V, K = struct.unpack("<II", _read_exact(fh, 8, path, "header"))
            estimates = []
            for wid in range(V):
                owner, nnz = struct.unpack("<II", _read_exact(fh, 8, path, f"word {wid} header"))
                if owner != wid:
                    raise FormatError(f"{path}: word {wid} stored with owner {owner}")
                if nnz == 0:
                    raise FormatError(f"{path}: word {wid} has empty support")
                rec = np.frombuffer(_read_exact(fh, nnz * dt.itemsize, path,
                                                f"word {wid} atoms"), dtype=dt)
                weights = rec["w"].astype(np.float64)
                total = weights.sum()
                if np.any(weights < 0) or total <= 0:
                    raise FormatError(f"{path}: word {wid} has invalid weights")
                estimates.append(DistributionalEstimate(
                    support=rec["a"].astype(np.int64),
                    weights=weights / total,  # re-normalize after f32 storage
                    owner=wid, own_atom=K + wid))
            if fh.read(1):
                raise FormatError(f"{path}: trailing bytes")
        return cls(estimates, n_clusters=K, mixing=mixing)
