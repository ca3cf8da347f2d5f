"""Run configuration: one flat record mirrored by the config file."""

from __future__ import annotations

from dataclasses import asdict, dataclass, fields

from ..model import ModelConfig

SCHEDULES = ("warmup-linear-decay", "linear-decay")

_TYPES = {"str": str, "int": int, "float": float, "bool": bool}


def field_type(f) -> type:
    """Concrete type of a config field (annotations are strings here)."""
    return f.type if isinstance(f.type, type) else _TYPES[f.type]


@dataclass
class TrainConfig:
    # data
    train_path: str = ""
    val_path: str = ""
    has_gold: bool = True  # corpora carry spaces (stripped before training)
    min_count: int = 1
    # model
    variant: str = "masked"
    d_model: int = 256
    heads: int = 4
    ff_size: int = 509
    layers: int = 1
    max_seg_len: int = 5
    dropout_in: float = 0.1
    dropout_layer: float = 0.15
    # embeddings
    cbow_epochs: int = 0
    cbow_window: int = 5
    # optimization
    steps: int = 8192
    checkpoint_every: int = 128
    clip_norm: float = 1.0
    char_budget: int = 8192
    lr: float = 1e-3
    warmup_steps: int = 1024
    schedule: str = "warmup-linear-decay"
    seed: int = 2
    # numerics
    float_mode: str = "float32"

    def validate(self) -> list[str]:
        problems = []
        if not self.train_path:
            problems.append("train_path: required")
        if self.schedule not in SCHEDULES:
            problems.append(f"schedule: must be one of {SCHEDULES}, got {self.schedule!r}")
        if self.steps <= 0:
            problems.append(f"steps: must be positive, got {self.steps}")
        if not (0 <= self.warmup_steps < max(self.steps, 1)):
            problems.append(f"warmup_steps: must satisfy 0 <= warmup < steps, got {self.warmup_steps}")
        if self.lr <= 0:
            problems.append(f"lr: must be positive, got {self.lr}")
        if self.clip_norm <= 0:
            problems.append(f"clip_norm: must be positive, got {self.clip_norm}")
        if self.char_budget <= 0:
            problems.append(f"char_budget: must be positive, got {self.char_budget}")
        if self.checkpoint_every <= 0:
            problems.append(f"checkpoint_every: must be positive, got {self.checkpoint_every}")
        if self.cbow_epochs < 0:
            problems.append(f"cbow_epochs: must be >= 0, got {self.cbow_epochs}")
        if self.min_count < 1:
            problems.append(f"min_count: must be >= 1, got {self.min_count}")
        if self.float_mode not in ("float32", "float64"):
            problems.append(f"float_mode: must be float32 or float64, got {self.float_mode!r}")
        problems.extend(f"{p}" for p in self.to_model_config().validate())
        return problems

    def to_model_config(self) -> ModelConfig:
        return ModelConfig(
            variant=self.variant,
            d_model=self.d_model,
            heads=self.heads,
            ff_size=self.ff_size,
            layers=self.layers,
            max_seg_len=self.max_seg_len,
            dropout_in=self.dropout_in,
            dropout_layer=self.dropout_layer,
        )

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "TrainConfig":
        known = {f.name: field_type(f) for f in fields(cls)}
        unknown = sorted(set(d) - set(known))
        if unknown:
            raise ValueError(f"unknown config fields: {', '.join(unknown)}")
        problems = []
        clean = {}
        for key, value in d.items():
            want = known[key]
            if want is float and isinstance(value, int) and not isinstance(value, bool):
                value = float(value)
            if isinstance(value, want) and not (want is not bool and isinstance(value, bool)):
                clean[key] = value
            else:
                problems.append(f"{key}: expected {want.__name__}, got {type(value).__name__} {value!r}")
        if problems:
            raise ValueError("; ".join(problems))
        return cls(**clean)

    def run_id(self) -> str:
        return f"{self.variant}-lr{self.lr:g}-seed{self.seed}"
