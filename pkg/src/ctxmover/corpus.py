"""Vocabulary construction and windowed co-occurrence counting.

The corpus is pre-tokenized text, one sentence per line, whitespace split.
Lines are co-occurrence boundaries: windows never cross them.  Tokens outside
the vocabulary contribute no counts but still occupy their positions, so the
distance between two surviving tokens is unaffected by filtering.
"""

from __future__ import annotations

import struct
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import BadParameter, EmptyCorpus, FormatError, IoError

COOC_MAGIC = b"CMVCOOC1"


def _iter_sentences(token_stream):
    """Yield sentences (token lists) from either stream shape.

    A stream of plain strings is treated as a single sentence; a stream of
    sequences is treated as one sentence per item.
    """
    pending = []
    for item in token_stream:
        if isinstance(item, str):
            pending.append(item)
        else:
            if pending:
                raise BadParameter("token stream mixes bare tokens and sentences")
            yield list(item)
    if pending:
        yield pending


def read_corpus(path):
    """Iterate sentences of a one-sentence-per-line UTF-8 corpus file."""
    path = Path(path)
    if not path.exists():
        raise IoError(f"corpus file not found: {path}")
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            tokens = line.split()
            if tokens:
                yield tokens


@dataclass
class Vocabulary:
    """Token/id table with corpus frequencies.

    Ids are dense 0..V-1 in stored order: descending frequency, ties broken
    lexicographically, which makes ids reproducible across runs.
    """

    tokens: list[str]
    counts: list[int]
    id_of: dict[str, int] = field(init=False)

    def __post_init__(self):
        self.id_of = {tok: i for i, tok in enumerate(self.tokens)}
        if len(self.id_of) != len(self.tokens):
            raise BadParameter("duplicate tokens in vocabulary")
        if len(self.counts) != len(self.tokens):
            raise BadParameter("token/count length mismatch")

    def __len__(self):
        return len(self.tokens)

    def __contains__(self, token):
        return token in self.id_of

    def get(self, token, default=None):
        return self.id_of.get(token, default)

    def save(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            for tok, cnt in zip(self.tokens, self.counts):
                fh.write(f"{tok}\t{cnt}\n")

    @classmethod
    def load(cls, path):
        path = Path(path)
        if not path.exists():
            raise IoError(f"vocabulary file not found: {path} (run the 'vocab' stage first)")
        tokens, counts = [], []
        with open(path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, 1):
                line = line.rstrip("\n")
                if not line:
                    continue
                try:
                    tok, cnt = line.split("\t")
                    counts.append(int(cnt))
                except ValueError as exc:
                    raise FormatError(f"{path}:{lineno}: expected 'token<TAB>count'") from exc
                tokens.append(tok)
        if not tokens:
            raise EmptyCorpus(f"vocabulary file {path} is empty")
        return cls(tokens=tokens, counts=counts)


def build_vocabulary(token_stream, min_count: int = 1) -> Vocabulary:
    """Count tokens and keep those occurring at least ``min_count`` times."""
    if min_count < 1:
        raise BadParameter(f"min_count must be >= 1, got {min_count}")
    freqs = Counter()
    for sentence in _iter_sentences(token_stream):
        freqs.update(sentence)
    if not freqs:
        raise EmptyCorpus("token stream is empty")
    kept = [(tok, cnt) for tok, cnt in freqs.items() if cnt >= min_count]
    if not kept:
        raise EmptyCorpus(f"no token reaches min_count={min_count}")
    kept.sort(key=lambda tc: (-tc[1], tc[0]))
    return Vocabulary(tokens=[t for t, _ in kept], counts=[c for _, c in kept])


@dataclass
class SparseCoocMatrix:
    """Sparse word-by-context association weights.

    ``entries`` maps (word_id, context_id) to a positive weight; fractional
    weights arise from the inverse-distance window weighting.
    """

    entries: dict[tuple[int, int], float]
    vocab_size: int
    window: int
    symmetric: bool = True

    def __eq__(self, other):
        if not isinstance(other, SparseCoocMatrix):
            return NotImplemented
        return (
            self.vocab_size == other.vocab_size
            and self.window == other.window
            and self.symmetric == other.symmetric
            and self.entries == other.entries
        )

    def total_mass(self):
        return sum(self.entries.values())

    def to_dense(self):
        dense = np.zeros((self.vocab_size, self.vocab_size))
        for (i, j), w in self.entries.items():
            dense[i, j] = w
        return dense

    def sorted_items(self):
        return sorted(self.entries.items())


def accumulate_cooccurrences(token_stream, vocab: Vocabulary,
                             window: int, weighted: bool = True) -> SparseCoocMatrix:
    """Accumulate windowed co-occurrence weights over a token stream.

    Every ordered in-vocabulary pair at distance ``d <= window`` within one
    sentence contributes ``1/d`` (or 1 with ``weighted=False``).  Both
    directions receive the identical increment in the same step, so the
    matrix is exactly symmetric.
    """
    if window < 1:
        raise BadParameter(f"window must be >= 1, got {window}")
    entries: dict[tuple[int, int], float] = {}
    get_id = vocab.id_of.get
    for sentence in _iter_sentences(token_stream):
        ids = [get_id(tok, -1) for tok in sentence]
        n = len(ids)
        for p in range(n):
            wid = ids[p]
            if wid < 0:
                continue
            for q in range(p + 1, min(p + window, n - 1) + 1):
                cid = ids[q]
                if cid < 0:
                    continue
                w = 1.0 / (q - p) if weighted else 1.0
                key = (wid, cid)
                entries[key] = entries.get(key, 0.0) + w
                key = (cid, wid)
                entries[key] = entries.get(key, 0.0) + w
    return SparseCoocMatrix(entries=entries, vocab_size=len(vocab),
                            window=window, symmetric=True)


def save_cooc(matrix: SparseCoocMatrix, path) -> None:
    """Write the binary co-occurrence format (little-endian, sorted triples)."""
    items = matrix.sorted_items()
    with open(path, "wb") as fh:
        fh.write(COOC_MAGIC)
        fh.write(struct.pack("<IIBQ", matrix.vocab_size, matrix.window,
                             1 if matrix.symmetric else 0, len(items)))
        if items:
            rec = np.empty(len(items), dtype=np.dtype([("w", "<u4"), ("c", "<u4"), ("x", "<f8")]))
            rec["w"] = [k[0] for k, _ in items]
            rec["c"] = [k[1] for k, _ in items]
            rec["x"] = [v for _, v in items]
            fh.write(rec.tobytes())


def _read_exact(fh, nbytes, path, what):
    data = fh.read(nbytes)
    if len(data) != nbytes:
        raise FormatError(f"{path}: truncated file while reading {what}")
    return data


def load_cooc(path) -> SparseCoocMatrix:
    path = Path(path)
    if not path.exists():
        raise IoError(f"co-occurrence file not found: {path} (run the 'cooc' stage first)")
    with open(path, "rb") as fh:
        magic = fh.read(len(COOC_MAGIC))
        if magic != COOC_MAGIC:
            raise FormatError(f"{path}: bad magic {magic!r}, expected {COOC_MAGIC!r}")
        header = _read_exact(fh, struct.calcsize("<IIBQ"), path, "header")
        vocab_size, window, sym, count = struct.unpack("<IIBQ", header)
        dt = np.dtype([("w", "<u4"), ("c", "<u4"), ("x", "<f8")])
        raw = _read_exact(fh, count * dt.itemsize, path, f"{count} entries")
        if fh.read(1):
            raise FormatError(f"{path}: trailing bytes after {count} entries")
    rec = np.frombuffer(raw, dtype=dt)
    entries = {(int(w), int(c)): float(x) for w, c, x in zip(rec["w"], rec["c"], rec["x"])}
    if len(entries) != count:
        raise FormatError(f"{path}: duplicate entries in file")
    for (w, c) in entries:
        if w >= vocab_size or c >= vocab_size:
            raise FormatError(f"{path}: entry ({w}, {c}) outside vocabulary size {vocab_size}")
    return SparseCoocMatrix(entries=entries, vocab_size=vocab_size,
                            window=window, symmetric=bool(sym))
