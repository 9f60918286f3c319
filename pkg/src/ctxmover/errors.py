"""Exception types raised across the toolkit.

Every error that callers are expected to catch has its own class so CLI
exit-code mapping and binding-level translation stay mechanical.
"""


class CtxMoverError(Exception):
    """Base class for all toolkit errors."""


class EmptyCorpus(CtxMoverError):
    """Token stream produced no usable vocabulary."""


class FormatError(CtxMoverError):
    """A binary artifact file is malformed (bad magic, truncation, ...)."""


class IoError(CtxMoverError):
    """A required input file is missing or unreadable."""


class BadParameter(CtxMoverError, ValueError):
    """A hyperparameter is outside its documented range."""


class BadInput(CtxMoverError, ValueError):
    """Numerical input violates a precondition (non-finite, zero vector, ...)."""


class BadClustering(CtxMoverError):
    """A clustering does not cover the ids it is asked to aggregate."""


class ZeroMassWord(CtxMoverError):
    """A word has no surviving association mass; caller applies the fallback."""


class DegenerateInput(CtxMoverError):
    """Input has no usable structure (e.g. rank-0 embedding table)."""


class OracleSizeLimit(CtxMoverError):
    """Exact solver invoked above its intended test-oracle size."""


class NumericalOverflow(CtxMoverError):
    """Kernel under/overflowed; regularization too small for the cost scale."""


class ShapeError(CtxMoverError, ValueError):
    """Array dimensions do not line up."""


class DegenerateCost(CtxMoverError):
    """Cost matrix cannot be normalized (zero median)."""


class OovError(CtxMoverError, KeyError):
    """Word not present in the vocabulary / estimate store."""


class EmptySentence(CtxMoverError):
    """Every token of a sentence fell outside the vocabulary."""


class DegenerateMetric(CtxMoverError):
    """Metric undefined for this input (zero variance, no positives, ...)."""
