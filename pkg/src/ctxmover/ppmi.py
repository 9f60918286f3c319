"""Smoothed, shifted positive PMI over sparse co-occurrence counts.

The association score of a (word, context) pair is

    max( log( #(w,c) * sum_c' #(c')^alpha / (#(w) * #(c)^alpha) ) - log(s), 0 )

with natural logarithms.  ``alpha`` smooths the context marginal (the sum in
the numerator runs over contexts with positive counts), ``s >= 1`` shifts
scores down and sparsifies the matrix.  Entries that land within 1e-15 of
zero are dropped so the result stays sparse.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .corpus import SparseCoocMatrix, _read_exact
from .errors import BadParameter, FormatError, IoError

SPPMI_MAGIC = b"CMVSPMI1"

_ZERO_EPS = 1e-15


@dataclass
class SppmiMatrix:
    """Sparse positive association scores; all stored values are > 0."""

    entries: dict[tuple[int, int], float]
    vocab_size: int
    alpha: float
    shift: float
    window: int = 0        # provenance from the source counts
    symmetric: bool = True

    def __eq__(self, other):
        if not isinstance(other, SppmiMatrix):
            return NotImplemented
        return (
            self.vocab_size == other.vocab_size
            and self.alpha == other.alpha
            and self.shift == other.shift
            and self.entries == other.entries
        )

    def row(self, word_id: int) -> dict[int, float]:
        return sppmi_row(self, word_id)

    def sorted_items(self):
        return sorted(self.entries.items())


def compute_sppmi(cooc: SparseCoocMatrix, alpha: float = 0.55,
                  shift: float = 5.0) -> SppmiMatrix:
    """Transform raw co-occurrence weights into an SPPMI matrix."""
    if not 0.0 <= alpha <= 1.0:
        raise BadParameter(f"alpha must lie in [0, 1], got {alpha}")
    if shift < 1.0:
        raise BadParameter(f"shift must be >= 1, got {shift}")
    if not cooc.entries:
        raise BadParameter("co-occurrence matrix is empty")

    items = cooc.sorted_items()
    W = np.array([k[0] for k, _ in items], dtype=np.int64)
    C = np.array([k[1] for k, _ in items], dtype=np.int64)
    X = np.array([v for _, v in items], dtype=np.float64)

    V = cooc.vocab_size
    row_marg = np.bincount(W, weights=X, minlength=V)
    col_marg = np.bincount(C, weights=X, minlength=V)
    col_pow = np.zeros(V)
    pos = col_marg > 0
    col_pow[pos] = col_marg[pos] ** alpha
    z_alpha = col_pow.sum()

    val = np.log(X * z_alpha / (row_marg[W] * col_pow[C])) - np.log(shift)
    keep = val > _ZERO_EPS
    entries = {
        (int(w), int(c)): float(v)
        for w, c, v in zip(W[keep], C[keep], val[keep])
    }
    return SppmiMatrix(entries=entries, vocab_size=V, alpha=alpha, shift=shift,
                       window=cooc.window, symmetric=cooc.symmetric)


def sppmi_row(matrix: SppmiMatrix, word_id: int) -> dict[int, float]:
    """The stored row of a word as a {context_id: value} map (may be empty)."""
    if not 0 <= word_id < matrix.vocab_size:
        raise IndexError(f"word id {word_id} outside vocabulary of size {matrix.vocab_size}")
    return {c: v for (w, c), v in matrix.entries.items() if w == word_id}


def save_sppmi(matrix: SppmiMatrix, path) -> None:
    """Co-occurrence binary layout plus alpha/shift header fields."""
    items = matrix.sorted_items()
    with open(path, "wb") as fh:
        fh.write(SPPMI_MAGIC)
        fh.write(struct.pack("<IIBddQ", matrix.vocab_size, matrix.window,
                             1 if matrix.symmetric else 0,
                             matrix.alpha, matrix.shift, len(items)))
        if items:
            rec = np.empty(len(items), dtype=np.dtype([("w", "<u4"), ("c", "<u4"), ("x", "<f8")]))
            rec["w"] = [k[0] for k, _ in items]
            rec["c"] = [k[1] for k, _ in items]
            rec["x"] = [v for _, v in items]
            fh.write(rec.tobytes())


def load_sppmi(path) -> SppmiMatrix:
    path = Path(path)
    if not path.exists():
        raise IoError(f"SPPMI file not found: {path} (run the 'sppmi' stage first)")
    with open(path, "rb") as fh:
        magic = fh.read(len(SPPMI_MAGIC))
        if magic != SPPMI_MAGIC:
            raise FormatError(f"{path}: bad magic {magic!r}, expected {SPPMI_MAGIC!r}")
        header = _read_exact(fh, struct.calcsize("<IIBddQ"), path, "header")
        vocab_size, window, sym, alpha, shift, count = struct.unpack("<IIBddQ", header)
        dt = np.dtype([("w", "<u4"), ("c", "<u4"), ("x", "<f8")])
        raw = _read_exact(fh, count * dt.itemsize, path, f"{count} entries")
        if fh.read(1):
            raise FormatError(f"{path}: trailing bytes after {count} entries")
    rec = np.frombuffer(raw, dtype=dt)
    entries = {(int(w), int(c)): float(x) for w, c, x in zip(rec["w"], rec["c"], rec["x"])}
    return SppmiMatrix(entries=entries, vocab_size=vocab_size, alpha=alpha,
                       shift=shift, window=window, symmetric=bool(sym))
