"""Run configuration: one flat key=value namespace shared by all stages.

Values resolve in order: command-line flag, then config file, then built-in
default.  Every run writes its fully-resolved configuration next to its
outputs so a run can be reproduced from the echoed file alone.
"""

from __future__ import annotations

from dataclasses import dataclass, fields
from pathlib import Path

from .errors import BadParameter, IoError

_PATH_KEYS = ("corpus", "vocab", "cooc", "sppmi", "clusters_file", "hist",
              "embeddings", "entail_vectors", "context_embeddings")


@dataclass
class RunConfig:
    # artifact paths
    corpus: str | None = None
    vocab: str | None = None
    cooc: str | None = None
    sppmi: str | None = None
    clusters_file: str | None = None
    hist: str | None = None
    embeddings: str | None = None
    entail_vectors: str | None = None
    context_embeddings: str | None = None

    # corpus statistics
    window: int = 10
    min_count: int = 10
    weighted_window: bool = True

    # association scores
    alpha: float = 0.55
    shift: float = 5.0
    beta: float = 1.0

    # clustering
    clusters: int = 300
    seed: int = 0
    kmeans_iters: int = 100

    # transport scoring
    lam: float = 0.1
    p: int = 1
    iters: int = 100
    mixing: float = 0.4
    clip: float | None = None
    cost_mode: str = "none"
    pc_removal: bool = True
    metric: str = "euclidean"
    entail_direction: str = "source-hyponym"

    threads: int | None = None

    def __post_init__(self):
        # keys pinned by the user (config file or flag), as opposed to
        # built-in defaults; task-level defaults never override these
        self._explicit: set[str] = set()

    def validate(self):
        checks = [
            ("window", self.window >= 1, ">= 1"),
            ("min_count", self.min_count >= 1, ">= 1"),
            ("alpha", 0.0 <= self.alpha <= 1.0, "in [0, 1]"),
            ("shift", self.shift >= 1.0, ">= 1"),
            ("beta", 0.0 <= self.beta <= 1.0, "in [0, 1]"),
            ("clusters", self.clusters >= 1, ">= 1"),
            ("kmeans_iters", self.kmeans_iters >= 1, ">= 1"),
            ("lam", self.lam > 0.0, "> 0"),
            ("p", self.p in (1, 2), "1 or 2"),
            ("iters", self.iters >= 1, ">= 1"),
            ("mixing", 0.0 <= self.mixing <= 1.0, "in [0, 1]"),
            ("clip", self.clip is None or self.clip > 0, "> 0 when set"),
            ("cost_mode", self.cost_mode in ("none", "median", "log"), "none|median|log"),
            ("metric", self.metric in ("euclidean", "angular", "entailment"),
             "euclidean|angular|entailment"),
            ("entail_direction",
             self.entail_direction in ("source-hyponym", "source-hypernym"),
             "source-hyponym|source-hypernym"),
            ("threads", self.threads is None or self.threads >= 1, ">= 1 when set"),
        ]
        for name, ok, rule in checks:
            if not ok:
                raise BadParameter(f"config value {name}={getattr(self, name)!r} must be {rule}")
        return self

    def save(self, path):
        lines = []
        for f in fields(self):
            value = getattr(self, f.name)
            lines.append(f"{f.name}={_format_value(value)}")
        Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path):
        path = Path(path)
        if not path.exists():
            raise IoError(f"config file not found: {path}")
        values = {}
        known = {f.name: f for f in fields(cls)}
        for lineno, line in enumerate(path.read_text(encoding="utf-8").splitlines(), 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise BadParameter(f"{path}:{lineno}: expected key=value")
            key, _, raw = line.partition("=")
            key = key.strip()
            if key not in known:
                raise BadParameter(f"{path}:{lineno}: unknown config key {key!r}")
            values[key] = _parse_value(key, raw.strip())
        cfg = cls(**values)
        cfg._explicit = set(values)
        return cfg.validate()

    def override(self, **flags):
        """Apply explicitly-set flags (None means 'not given')."""
        for key, value in flags.items():
            if value is not None:
                setattr(self, key, value)
                self._explicit.add(key)
        return self.validate()

    def apply_task_defaults(self, **defaults):
        """Fill task-specific defaults for keys the user left untouched."""
        for key, value in defaults.items():
            if key not in self._explicit:
                setattr(self, key, value)
        return self.validate()


def _format_value(value):
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)  # repr round-trips doubles exactly
    return str(value)


def _parse_value(key, raw):
    if raw == "":
        return None
    f = {f.name: f for f in fields(RunConfig)}[key]
    ann = f.type
    if key in _PATH_KEYS:
        return raw
    if "bool" in ann:
        if raw.lower() in ("true", "1", "yes"):
            return True
        if raw.lower() in ("false", "0", "no"):
            return False
        raise BadParameter(f"config key {key}: expected a boolean, got {raw!r}")
    if "int" in ann:
        return int(raw)
    if "float" in ann:
        return float(raw)
    return raw
