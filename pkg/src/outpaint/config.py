"""Training configuration and TOML config-file parsing."""

from __future__ import annotations

import dataclasses
import sys
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Any, Mapping

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .errors import ConfigError
from .losses import ADV_BREAKPOINTS, ADV_VALUES, LossWeights

# variant -> (residual generator blocks, dual discriminator)
VARIANTS = {
    "global-only": (False, False),
    "local": (False, True),
    "residual": (True, True),
}


@dataclass
class TrainConfig:
    learning_rate: float = 0.0003
    beta1: float = 0.5
    beta2: float = 0.999
    epochs: int = 50
    batch_size: int = 16
    seed: int = 0
    lambda_rec: float = 1.0
    adv_breakpoints: tuple[int, ...] = ADV_BREAKPOINTS
    adv_values: tuple[float, ...] = ADV_VALUES
    adv_override: float | None = None
    variant: str = "residual"
    data_dir: str | None = None
    val_dir: str | None = None
    checkpoint_dir: str = "checkpoints"
    checkpoint_every: int = 5
    inner_size: int = 128
    local_margin: int = 0
    workers: int = 0

    def __post_init__(self):
        self.adv_breakpoints = tuple(self.adv_breakpoints)
        self.adv_values = tuple(self.adv_values)
        self.validate()

    def validate(self) -> None:
        if not self.learning_rate > 0:
            raise ConfigError("learning_rate: must be > 0")
        if not 0 <= self.beta1 < 1:
            raise ConfigError("beta1: must satisfy 0 <= beta1 < 1")
        if not 0 <= self.beta2 < 1:
            raise ConfigError("beta2: must satisfy 0 <= beta2 < 1")
        if not self.beta1 < self.beta2:
            raise ConfigError("beta1: must be smaller than beta2")
        if self.epochs < 1:
            raise ConfigError("epochs: must be >= 1")
        if self.batch_size < 1:
            raise ConfigError("batch_size: must be >= 1")
        if self.checkpoint_every < 1:
            raise ConfigError("checkpoint_every: must be >= 1")
        if self.variant not in VARIANTS:
            raise ConfigError(f"variant: must be one of {', '.join(VARIANTS)}")
        if not 0 <= self.inner_size <= 192 or self.inner_size % 2:
            raise ConfigError("inner_size: must be an even size in [0, 192]")
        if not 0 <= 2 * self.local_margin <= self.inner_size:
            raise ConfigError("local_margin: must lie in [0, inner_size / 2]")
        if self.workers < 0:
            raise ConfigError("workers: must be >= 0")
        try:
            self.loss_weights
        except ValueError as exc:
            raise ConfigError(f"adv_values: {exc}") from exc

    @property
    def loss_weights(self) -> LossWeights:
        return LossWeights(self.lambda_rec, self.adv_breakpoints, self.adv_values, self.adv_override)

    @property
    def residual(self) -> bool:
        return VARIANTS[self.variant][0]

    @property
    def dual(self) -> bool:
        return VARIANTS[self.variant][1]

    def to_dict(self) -> dict[str, Any]:
        d = dataclasses.asdict(self)
        d["adv_breakpoints"] = list(self.adv_breakpoints)
        d["adv_values"] = list(self.adv_values)
        return d

    @classmethod
    def from_dict(cls, values: Mapping[str, Any]) -> "TrainConfig":
        return cls(**_coerce(values))


_FIELDS = {f.name: f for f in fields(TrainConfig)}


def _check_scalar(key: str, value: Any, kind: type) -> Any:
    if kind is float and isinstance(value, int) and not isinstance(value, bool):
        return float(value)
    if not isinstance(value, kind) or isinstance(value, bool) and kind is not bool:
        raise ConfigError(f"{key}: expected {kind.__name__}, got {type(value).__name__}")
    return value


def _coerce(values: Mapping[str, Any]) -> dict[str, Any]:
    out = {}
    for key, value in values.items():
        if key not in _FIELDS:
            raise ConfigError(f"{key}: unknown configuration key")
        if key == "adv_breakpoints":
            if not isinstance(value, (list, tuple)):
                raise ConfigError(f"{key}: expected a list")
            value = tuple(_check_scalar(key, v, int) for v in value)
        elif key == "adv_values":
            if not isinstance(value, (list, tuple)):
                raise ConfigError(f"{key}: expected a list")
            value = tuple(_check_scalar(key, v, float) for v in value)
        elif key == "adv_override":
            value = None if value is None else _check_scalar(key, value, float)
        elif key in ("data_dir", "val_dir", "checkpoint_dir"):
            if isinstance(value, Path):
                value = str(value)
            value = None if value is None else _check_scalar(key, value, str)
        else:
            default = _FIELDS[key].default
            value = _check_scalar(key, value, type(default))
        out[key] = value
    return out


def parse_config(path=None, overrides: Mapping[str, Any] | None = None) -> TrainConfig:
    """Defaults, then the TOML file at ``path``, then ``overrides`` (``None`` values skipped)."""
    values: dict[str, Any] = {}
    if path is not None:
        path = Path(path)
        try:
            with path.open("rb") as fh:
                values.update(tomllib.load(fh))
        except FileNotFoundError as exc:
            raise ConfigError(f"config file {path} not found") from exc
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"config file {path} is malformed: {exc}") from exc
    if overrides:
        values.update({k: v for k, v in overrides.items() if v is not None})
    return TrainConfig.from_dict(values)
