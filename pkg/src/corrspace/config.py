"""Experiment configuration: defaults, validation, (de)serialization.

Defaults follow the reference protocol: k is half the smallest view
dimensionality, the final covariance regulariser is 1e-16, the batch-level
regulariser used during training is 1e-4, batch size 5500, Recall@10. The
seed is mandatory; nothing draws entropy from the wall clock.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

from corrspace.errors import ConfigError

METHODS = ("cca", "dcca", "gcca-linear", "dgcca")
METRICS = ("cosine", "euclidean")

VIDEO_WEIGHT_DECAY = 1e-5


@dataclass
class ExperimentConfig:
    manifest: str = ""
    method: str = "cca"
    views: list[str] = field(default_factory=list)
    k: int | None = None  # default: half the smallest view dim, resolved at fit
    r: float = 1e-16
    train_r: float = 1e-4
    batch_size: int = 5500
    max_epochs: int = 10
    lr: float = 1e-3
    weight_decay: float | None = None  # default 0.0, or 1e-5 with a "video" tag
    weights: list[float] | None = None  # per-view loss weights, default all 1
    n: int = 10
    metric: str = "cosine"
    seed: int | None = None
    out_dir: str = ""
    view_tags: dict[str, str] = field(default_factory=dict)

    def validate(self) -> None:
        if self.method not in METHODS:
            raise ConfigError(f"unknown method {self.method!r}; expected one of {METHODS}")
        if self.metric not in METRICS:
            raise ConfigError(f"unknown metric {self.metric!r}; expected one of {METRICS}")
        if self.seed is None:
            raise ConfigError("seed is mandatory")
        if len(self.views) < 2:
            raise ConfigError("at least 2 views are required")
        if self.method in ("cca", "dcca") and len(self.views) != 2:
            hint = " (use dgcca for more than 2 views)" if len(self.views) > 2 else ""
            raise ConfigError(f"method {self.method!r} takes exactly 2 views{hint}")
        if self.k is not None and self.k < 1:
            raise ConfigError("k must be >= 1")
        if self.r < 0 or self.train_r < 0:
            raise ConfigError("regularisers must be >= 0")
        if self.batch_size < 1:
            raise ConfigError("batch_size must be >= 1")
        if self.max_epochs < 1:
            raise ConfigError("max_epochs must be >= 1")
        if self.n < 1:
            raise ConfigError("retrieval n must be >= 1")
        if self.weights is not None:
            if len(self.weights) != len(self.views):
                raise ConfigError("weights must list one value per view")
            if any(w <= 0 for w in self.weights):
                raise ConfigError("per-view weights must be > 0")

    def resolved_weight_decay(self) -> float:
        if self.weight_decay is not None:
            return self.weight_decay
        tags = {self.view_tags.get(v, "") for v in self.views}
        return VIDEO_WEIGHT_DECAY if "video" in tags else 0.0

    def resolved_weights(self) -> list[float]:
        return list(self.weights) if self.weights is not None else [1.0] * len(self.views)

    def resolve_k(self, dims: list[int]) -> int:
        k = self.k if self.k is not None else max(1, min(dims) // 2)
        if k > min(dims):
            raise ConfigError(f"k={k} exceeds the smallest view dimensionality {min(dims)}")
        return k

    def snapshot(self) -> dict:
        """Fully-resolved dict for run records (self-describing defaults)."""
        d = asdict(self)
        d["weight_decay"] = self.resolved_weight_decay()
        d["weights"] = self.resolved_weights()
        return d

    def to_json(self, path) -> None:
        Path(path).write_text(json.dumps(asdict(self), indent=2, sort_keys=True) + "\n")

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        allowed = set(cls.__dataclass_fields__)
        unknown = set(d) - allowed
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        cfg = cls(**d)
        cfg.validate()
        return cfg

    @classmethod
    def from_json(cls, path) -> "ExperimentConfig":
        path = Path(path)
        if not path.exists():
            raise ConfigError(f"config file not found: {path}")
        try:
            d = json.loads(path.read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON ({exc})") from exc
        if not isinstance(d, dict):
            raise ConfigError(f"{path}: config must be a JSON object")
        return cls.from_dict(d)
