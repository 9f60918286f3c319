"""Context clustering and per-cluster SPPMI aggregation.

Clustering reduces the histogram support from the full context set to K
representative contexts (the centroids).  Aggregation sums each word's SPPMI
mass within every cluster; an optional column normalization then divides each
column by a power ``beta`` of its total mass to balance uneven spread across
clusters.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .corpus import _read_exact
from .errors import (
    BadClustering,
    BadInput,
    BadParameter,
    FormatError,
    IoError,
)
from .ppmi import SppmiMatrix

CLUSTER_MAGIC = b"CMVCLUS1"
CSPPMI_MAGIC = b"CMVCSPM1"


@dataclass
class EmbeddingTable:
    """Dense vectors aligned to vocabulary ids."""

    vectors: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.vectors, dtype=np.float64)
        if v.ndim != 2:
            raise BadInput(f"embedding table must be 2-D, got shape {v.shape}")
        if not np.all(np.isfinite(v)):
            raise BadInput("embedding table contains non-finite values")
        self.vectors = v

    @property
    def dim(self):
        return self.vectors.shape[1]

    def __len__(self):
        return self.vectors.shape[0]


def load_embeddings(path, vocab) -> EmbeddingTable:
    """Read GloVe-style text vectors and align them to vocabulary ids.

    Every vocabulary token must appear in the file; extra tokens are ignored.
    """
    path = Path(path)
    if not path.exists():
        raise IoError(f"embedding file not found: {path}")
    wanted = vocab.id_of
    rows: dict[int, np.ndarray] = {}
    dim = None
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            parts = line.rstrip("\n").split(" ")
            if len(parts) < 2:
                continue
            tok = parts[0]
            idx = wanted.get(tok)
            if idx is None:
                continue
            vec = np.array([float(x) for x in parts[1:]], dtype=np.float64)
            if dim is None:
                dim = vec.size
            elif vec.size != dim:
                raise FormatError(f"{path}:{lineno}: inconsistent vector length")
            rows[idx] = vec
    missing = len(vocab) - len(rows)
    if missing:
        examples = [t for t in vocab.tokens if vocab.id_of[t] not in rows][:5]
        raise BadInput(
            f"{missing} vocabulary tokens have no embedding in {path} "
            f"(e.g. {examples})"
        )
    table = np.stack([rows[i] for i in range(len(vocab))])
    return EmbeddingTable(vectors=table)


@dataclass
class ContextClustering:
    """K centroids plus a context-to-cluster assignment."""

    centroids: np.ndarray
    assignment: np.ndarray
    metric_tag: str = "euclidean"
    objective_history: list[float] = field(default_factory=list, repr=False)

    @property
    def n_clusters(self):
        return self.centroids.shape[0]

    @classmethod
    def identity(cls, embeddings: EmbeddingTable, metric_tag: str = "euclidean"):
        """One cluster per context; centroids are the context vectors."""
        vectors = _clustering_space(embeddings.vectors, metric_tag)
        return cls(centroids=vectors.copy(),
                   assignment=np.arange(len(embeddings), dtype=np.int64),
                   metric_tag=metric_tag)

    def save(self, path):
        K, d = self.centroids.shape
        with open(path, "wb") as fh:
            fh.write(CLUSTER_MAGIC)
            fh.write(struct.pack("<II", K, d))
            fh.write(self.centroids.astype("<f4").tobytes())
            fh.write(self.assignment.astype("<u4").tobytes())

    @classmethod
    def load(cls, path):
        path = Path(path)
        if not path.exists():
            raise IoError(f"clustering file not found: {path} (run the 'cluster' stage first)")
        with open(path, "rb") as fh:
            magic = fh.read(len(CLUSTER_MAGIC))
            if magic != CLUSTER_MAGIC:
                raise FormatError(f"{path}: bad magic {magic!r}, expected {CLUSTER_MAGIC!r}")
            header = _read_exact(fh, 8, path, "header")
            K, d = struct.unpack("<II", header)
            cents = np.frombuffer(_read_exact(fh, K * d * 4, path, "centroids"),
                                  dtype="<f4").reshape(K, d).astype(np.float64)
            rest = fh.read()
        if len(rest) % 4:
            raise FormatError(f"{path}: assignment block has odd size {len(rest)}")
        assignment = np.frombuffer(rest, dtype="<u4").astype(np.int64)
        if assignment.size and assignment.max() >= K:
            raise FormatError(f"{path}: assignment references cluster >= {K}")
        return cls(centroids=cents, assignment=assignment)


def _clustering_space(vectors: np.ndarray, metric_tag: str) -> np.ndarray:
    """Vectors in the space the k-means objective runs in.

    Angular clustering normalizes to the unit sphere first, so squared
    Euclidean k-means approximates spherical k-means with a single kernel.
    """
    if metric_tag == "euclidean":
        return vectors
    if metric_tag == "angular":
        norms = np.linalg.norm(vectors, axis=1, keepdims=True)
        if np.any(norms == 0):
            raise BadInput("angular clustering requires nonzero vectors")
        return vectors / norms
    raise BadParameter(f"unknown clustering metric {metric_tag!r}")


def _kmeans_pp_init(X, K, gen):
    """Seeded k-means++ initialization (centroids are data points)."""
    n = X.shape[0]
    centroids = np.empty((K, X.shape[1]))
    centroids[0] = X[gen.integers(n)]
    d2 = ((X - centroids[0]) ** 2).sum(axis=1)
    for k in range(1, K):
        total = d2.sum()
        if total <= 0:
            centroids[k] = X[gen.integers(n)]
        else:
            centroids[k] = X[gen.choice(n, p=d2 / total)]
        d2 = np.minimum(d2, ((X - centroids[k]) ** 2).sum(axis=1))
    return centroids


def _assign(X, centroids):
    # ||x - c||^2 = ||x||^2 - 2 x.c + ||c||^2; argmin ties go to the lowest index
    d2 = (
        (X ** 2).sum(axis=1)[:, None]
        - 2.0 * X @ centroids.T
        + (centroids ** 2).sum(axis=1)[None, :]
    )
    labels = np.argmin(d2, axis=1)
    return labels, np.maximum(d2[np.arange(X.shape[0]), labels], 0.0)


def kmeans(embeddings: EmbeddingTable, K: int, seed: int = 0,
           max_iters: int = 100, metric_tag: str = "euclidean") -> ContextClustering:
    """Lloyd's algorithm with seeded k-means++ starts.

    Deterministic given ``seed``.  Empty clusters are reseeded with the point
    currently farthest from its centroid.  The recorded objective history is
    non-increasing.
    """
    if max_iters < 1:
        raise BadParameter(f"max_iters must be >= 1, got {max_iters}")
    X = _clustering_space(embeddings.vectors, metric_tag)
    n = X.shape[0]
    if not 1 <= K <= n:
        raise BadParameter(f"cluster count {K} must lie in [1, {n}]")

    gen = np.random.default_rng(seed)
    centroids = _kmeans_pp_init(X, K, gen)
    labels = np.full(n, -1)
    history = []
    for _ in range(max_iters):
        new_labels, d2 = _assign(X, centroids)
        # reseed empty clusters from the farthest-off points, one each
        counts = np.bincount(new_labels, minlength=K)
        empties = np.flatnonzero(counts == 0)
        if empties.size:
            order = np.argsort(-d2, kind="stable")
            taken = 0
            for k in empties:
                centroids[k] = X[order[taken]]
                taken += 1
            new_labels, d2 = _assign(X, centroids)
        history.append(float(d2.sum()))
        if np.array_equal(new_labels, labels):
            break
        labels = new_labels
        for k in range(K):
            members = labels == k
            if members.any():
                centroids[k] = X[members].mean(axis=0)
    return ContextClustering(centroids=centroids, assignment=labels.astype(np.int64),
                             metric_tag=metric_tag, objective_history=history)


@dataclass
class ClusteredSppmi:
    """Dense word-by-cluster mass table; ``beta`` is the normalization applied."""

    table: np.ndarray
    beta: float = 0.0

    @property
    def shape(self):
        return self.table.shape

    def save(self, path):
        V, K = self.table.shape
        with open(path, "wb") as fh:
            fh.write(CSPPMI_MAGIC)
            fh.write(struct.pack("<IId", V, K, self.beta))
            fh.write(self.table.astype("<f4").tobytes())

    @classmethod
    def load(cls, path):
        path = Path(path)
        if not path.exists():
            raise IoError(f"clustered-mass file not found: {path}")
        with open(path, "rb") as fh:
            magic = fh.read(len(CSPPMI_MAGIC))
            if magic != CSPPMI_MAGIC:
                raise FormatError(f"{path}: bad magic {magic!r}, expected {CSPPMI_MAGIC!r}")
            header = _read_exact(fh, struct.calcsize("<IId"), path, "header")
            V, K, beta = struct.unpack("<IId", header)
            raw = _read_exact(fh, V * K * 4, path, "table")
            if fh.read(1):
                raise FormatError(f"{path}: trailing bytes")
        table = np.frombuffer(raw, dtype="<f4").reshape(V, K).astype(np.float64)
        return cls(table=table, beta=beta)


def aggregate_sppmi(sppmi: SppmiMatrix, clustering: ContextClustering) -> ClusteredSppmi:
    """Sum each word's SPPMI mass per cluster (no normalization yet)."""
    assignment = clustering.assignment
    if sppmi.vocab_size > assignment.size:
        raise BadClustering(
            f"clustering covers {assignment.size} contexts but the SPPMI matrix "
            f"has {sppmi.vocab_size}"
        )
    items = sppmi.sorted_items()
    table = np.zeros((sppmi.vocab_size, clustering.n_clusters))
    if items:
        W = np.array([k[0] for k, _ in items])
        C = np.array([k[1] for k, _ in items])
        X = np.array([v for _, v in items])
        np.add.at(table, (W, assignment[C]), X)
    return ClusteredSppmi(table=table, beta=0.0)


def column_normalize(clustered: ClusteredSppmi, beta: float) -> ClusteredSppmi:
    """Divide each column by (its total mass) ** beta.

    ``beta=0`` is the bit-for-bit identity; columns with zero mass stay
    all-zero.  Apply once per table.
    """
    if not 0.0 <= beta <= 1.0:
        raise BadParameter(f"beta must lie in [0, 1], got {beta}")
    col_mass = clustered.table.sum(axis=0)
    denom = np.ones_like(col_mass)
    pos = col_mass > 0
    denom[pos] = col_mass[pos] ** beta
    return ClusteredSppmi(table=clustered.table / denom[None, :], beta=beta)
