"""Transport distances between words and sentences over a shared atom space.

The ground space holds one vector per atom: cluster centroids first (ids
``0..K-1``), then one point atom per word (ids ``K..K+V-1``).  Ground costs
between two support sets come from one of three metrics:

* ``euclidean``: ``|x - y|_2 ** p``
* ``angular``: ``arccos(clamped cosine similarity) ** p``
* ``entailment``: the asymmetric feature-inclusion cost
  ``-sigma(-v_i) . log sigma(-v_j)`` (exponent ignored; used raw)

Word distances transport one word's context histogram onto the other's;
sentences are first summarized as the regularized barycenter of their words'
histograms over the union of their supports, then compared the same way.
With the asymmetric entailment cost the first argument is the transport
source, so hyponym-as-source scoring matches hypernym direction conventions.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from .errors import (
    BadInput,
    BadParameter,
    EmptySentence,
    ShapeError,
)
from .estimates import DistributionalEstimate, HistogramStore
from .ot import barycenter, preprocess_cost, sinkhorn

_METRICS = ("euclidean", "angular", "entailment")


@dataclass
class GroundSpace:
    """Atom vectors plus the metric giving transport costs between them."""

    atom_vectors: np.ndarray
    metric: str = "euclidean"
    p: int = 1
    n_clusters: int = 0

    def __post_init__(self):
        v = np.asarray(self.atom_vectors, dtype=np.float64)
        if v.ndim != 2:
            raise BadInput(f"atom vectors must be 2-D, got shape {v.shape}")
        if not np.all(np.isfinite(v)):
            raise BadInput("atom vectors contain non-finite values")
        if self.metric not in _METRICS:
            raise BadParameter(f"unknown ground metric {self.metric!r}")
        if self.p not in (1, 2):
            raise BadParameter(f"cost exponent must be 1 or 2, got {self.p}")
        self.atom_vectors = v

    @classmethod
    def assemble(cls, centroids, point_vectors, metric="euclidean", p=1):
        """Stack centroid atoms and per-word point atoms into one table."""
        c = np.asarray(centroids, dtype=np.float64)
        w = np.asarray(point_vectors, dtype=np.float64)
        if c.shape[1] != w.shape[1]:
            raise ShapeError(
                f"centroid dim {c.shape[1]} != point-vector dim {w.shape[1]}")
        return cls(atom_vectors=np.vstack([c, w]), metric=metric, p=p,
                   n_clusters=c.shape[0])


def entailment_cost(v_i, v_j) -> float:
    """Asymmetric cost of explaining target features by source features.

    Always non-negative; decreasing in the source components (a source with
    no known features entails anything at no cost) and increasing in the
    target components.
    """
    v_i = np.asarray(v_i, dtype=np.float64).ravel()
    v_j = np.asarray(v_j, dtype=np.float64).ravel()
    if v_i.shape != v_j.shape:
        raise ShapeError(f"entailment vectors differ in length: {v_i.size} vs {v_j.size}")
    # -log sigma(-x) is softplus(x); logaddexp keeps it overflow-safe
    return float(np.sum(expit(-v_i) * np.logaddexp(0.0, v_j)))


def _entailment_matrix(Xa, Xb):
    return expit(-Xa) @ np.logaddexp(0.0, Xb).T


def ground_cost(space: GroundSpace, support_a, support_b) -> np.ndarray:
    """Raw cost matrix between two atom id sets (no preprocessing)."""
    ids_a = np.asarray(support_a, dtype=np.int64)
    ids_b = np.asarray(support_b, dtype=np.int64)
    n_atoms = space.atom_vectors.shape[0]
    for ids in (ids_a, ids_b):
        if ids.size == 0:
            raise BadInput("empty support")
        if ids.min(initial=0) < 0 or ids.max(initial=0) >= n_atoms:
            raise BadInput(f"supports must reference atoms 0..{n_atoms - 1}")
    Xa = space.atom_vectors[ids_a]
    Xb = space.atom_vectors[ids_b]
    if space.metric == "euclidean":
        d2 = (
            (Xa ** 2).sum(axis=1)[:, None]
            - 2.0 * Xa @ Xb.T
            + (Xb ** 2).sum(axis=1)[None, :]
        )
        d = np.sqrt(np.maximum(d2, 0.0))
        return d if space.p == 1 else d ** space.p
    if space.metric == "angular":
        na = np.linalg.norm(Xa, axis=1)
        nb = np.linalg.norm(Xb, axis=1)
        if np.any(na == 0) or np.any(nb == 0):
            raise BadInput("angular metric undefined for zero vectors")
        cos = np.clip((Xa / na[:, None]) @ (Xb / nb[:, None]).T, -1.0, 1.0)
        ang = np.arccos(cos)
        return ang if space.p == 1 else ang ** space.p
    return _entailment_matrix(Xa, Xb)  # exponent intentionally ignored


@dataclass(frozen=True)
class SentenceEstimate:
    """A sentence's histogram over ground-space atoms."""

    support: np.ndarray
    weights: np.ndarray
    provenance: tuple[int, ...]


def _pair_cost(space, support_a, support_b, cost_mode, clip):
    raw = ground_cost(space, support_a, support_b)
    return preprocess_cost(raw, mode=cost_mode, clip=clip, p=space.p)


def cmd(w1: int, w2: int, store: HistogramStore, space: GroundSpace,
        lam: float = 0.1, iters: int = 100, cost_mode: str = "none",
        clip: float | None = None) -> float:
    """Transport cost between two words' context histograms.

    With the entailment metric the cost is directional: ``w1`` is the
    transport source (the hyponym candidate in entailment scoring).
    """
    est1 = store.estimate(w1)
    est2 = store.estimate(w2)
    M = _pair_cost(space, est1.support, est2.support, cost_mode, clip)
    return sinkhorn(est1.weights, est2.weights, M, lam=lam, iters=iters).cost


def comb(sentence, store: HistogramStore, space: GroundSpace, eta=None,
         lam: float = 0.1, iters: int = 100, cost_mode: str = "none",
         clip: float | None = None) -> SentenceEstimate:
    """Summarize a sentence as the barycenter of its words' histograms.

    The barycenter runs on the union of the word supports.  A sentence whose
    words are all one id reduces exactly to that word's histogram (the
    regularized sweep would only blur a known-exact answer).
    """
    ids = list(sentence)
    if not ids:
        raise EmptySentence("no in-vocabulary words to represent")
    if eta is not None and len(eta) != len(ids):
        raise BadParameter(f"got {len(eta)} weights for {len(ids)} words")
    estimates = [store.estimate(w) for w in ids]

    if len(set(ids)) == 1:
        est = estimates[0]
        return SentenceEstimate(support=est.support.copy(),
                                weights=est.weights.copy(),
                                provenance=tuple(ids))

    union = np.unique(np.concatenate([est.support for est in estimates]))
    pos = {atom: k for k, atom in enumerate(union)}
    hists = np.zeros((len(estimates), union.size))
    for row, est in enumerate(estimates):
        for atom, w in zip(est.support, est.weights):
            hists[row, pos[atom]] = w
    M = _pair_cost(space, union, union, cost_mode, clip)
    weights = barycenter(list(hists), eta, M, lam=lam, iters=iters)
    return SentenceEstimate(support=union, weights=weights, provenance=tuple(ids))


def _as_sentence_estimate(s, store, space, lam, iters, cost_mode, clip):
    if isinstance(s, SentenceEstimate):
        return s
    return comb(s, store, space, lam=lam, iters=iters,
                cost_mode=cost_mode, clip=clip)


def sentence_cmd(s1, s2, store: HistogramStore, space: GroundSpace,
                 lam: float = 0.1, iters: int = 100, cost_mode: str = "none",
                 clip: float | None = None) -> float:
    """Transport cost between two sentences' barycenter histograms.

    Accepts word-id lists or prebuilt `SentenceEstimate` objects.
    """
    e1 = _as_sentence_estimate(s1, store, space, lam, iters, cost_mode, clip)
    e2 = _as_sentence_estimate(s2, store, space, lam, iters, cost_mode, clip)
    M = _pair_cost(space, e1.support, e2.support, cost_mode, clip)
    return sinkhorn(e1.weights, e2.weights, M, lam=lam, iters=iters).cost


def nearest_neighbors(query, candidates, k: int, store: HistogramStore,
                      space: GroundSpace, lam: float = 0.1, iters: int = 100,
                      cost_mode: str = "none", clip: float | None = None):
    """The k candidates closest to a word or sentence estimate.

    Returns (word_id, distance) pairs, ascending by distance with ties
    broken by word id.  The query is always the transport source.
    """
    cand = list(candidates)
    if not cand:
        raise BadParameter("candidate set is empty")
    if not 1 <= k <= len(cand):
        raise BadParameter(f"k must lie in [1, {len(cand)}], got {k}")
    if isinstance(query, (int, np.integer)):
        q = store.estimate(int(query))
        q_support, q_weights = q.support, q.weights
    elif isinstance(query, SentenceEstimate):
        q_support, q_weights = query.support, query.weights
    else:
        raise BadParameter("query must be a word id or a SentenceEstimate")

    scored = []
    for wid in cand:
        est = store.estimate(wid)
        M = _pair_cost(space, q_support, est.support, cost_mode, clip)
        dist = sinkhorn(q_weights, est.weights, M, lam=lam, iters=iters).cost
        scored.append((int(wid), float(dist)))
    scored.sort(key=lambda t: (t[1], t[0]))
    return scored[:k]
