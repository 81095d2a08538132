"""Run configuration: training hyperparameters plus the flat key=value file format.

Unknown keys in a config file are an error (fail fast). Precedence is
handled by the CLI: command-line ``--set key=value`` > config file > the
defaults below.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from pathlib import Path

from .errors import BadConfig


@dataclass
class RunConfig:
    epochs: int
    seed: int
    embed_dim: int = 32          # D, up to 128
    hidden_dim: int = 64         # MLP hidden width H
    temperature: float = 0.07    # contrastive temperature
    lambda_center: float = 0.01  # center-loss weight
    momentum: float = 0.99       # boundary EMA coefficient
    fake_batch: int = 32
    real_batch: int = 4
    warmup_epochs: int = 2
    base_lr: float = 3e-3
    min_lr: float = 0.0
    weight_decay: float = 1e-2
    crop_size: int = 16
    # training-time corruption ranges (quantize levels log-uniform, blur sigma uniform)
    aug_quantize_prob: float = 0.5
    aug_quantize_lo: float = 8.0
    aug_quantize_hi: float = 64.0
    aug_smooth_prob: float = 0.5
    aug_smooth_lo: float = 0.1
    aug_smooth_hi: float = 2.0
    boundary_cadence: str = "batch"   # "batch" | "epoch"
    stratified_fakes: bool = False
    supcon_denominator: str = "batch"  # "batch" | "positives" (diagnostic variant)

    def validate(self) -> None:
        if self.epochs < 0:
            raise BadConfig("epochs must be >= 0")
        if self.seed < 0 or self.seed >= 2 ** 64:
            raise BadConfig("seed must be an unsigned 64-bit integer")
        if not (1 <= self.embed_dim <= 128):
            raise BadConfig("embed_dim must be in [1, 128]")
        if self.hidden_dim < 1:
            raise BadConfig("hidden_dim must be >= 1")
        if self.temperature <= 0:
            raise BadConfig("temperature must be > 0")
        if self.lambda_center < 0:
            raise BadConfig("lambda_center must be >= 0")
        if not (0 <= self.momentum < 1):
            raise BadConfig("momentum must be in [0, 1)")
        if self.fake_batch < 1 or self.real_batch < 0:
            raise BadConfig("fake_batch must be >= 1 and real_batch >= 0")
        if self.fake_batch + self.real_batch < 4:
            raise BadConfig("fake_batch + real_batch must be >= 4")
        if self.epochs > 0 and not (0 <= self.warmup_epochs < self.epochs):
            raise BadConfig("warmup_epochs must satisfy 0 <= warmup < epochs")
        if self.base_lr <= 0 or self.min_lr < 0:
            raise BadConfig("base_lr must be > 0 and min_lr >= 0")
        if self.weight_decay < 0:
            raise BadConfig("weight_decay must be >= 0")
        if self.crop_size < 1:
            raise BadConfig("crop_size must be >= 1")
        if not (0 < self.aug_quantize_lo <= self.aug_quantize_hi):
            raise BadConfig("quantize range must satisfy 0 < lo <= hi")
        if not (0 <= self.aug_smooth_lo <= self.aug_smooth_hi):
            raise BadConfig("smooth range must satisfy 0 <= lo <= hi")
        if not (0 <= self.aug_quantize_prob <= 1 and 0 <= self.aug_smooth_prob <= 1):
            raise BadConfig("augmentation probabilities must be in [0, 1]")
        if self.boundary_cadence not in ("batch", "epoch"):
            raise BadConfig("boundary_cadence must be 'batch' or 'epoch'")
        if self.supcon_denominator not in ("batch", "positives"):
            raise BadConfig("supcon_denominator must be 'batch' or 'positives'")


_FIELDS = {f.name: f for f in dataclasses.fields(RunConfig)}


def _coerce(name: str, raw: str):
    field = _FIELDS[name]
    if field.type in ("int", int):
        return int(raw)
    if field.type in ("float", float):
        return float(raw)
    if field.type in ("bool", bool):
        if raw.lower() in ("true", "1", "yes"):
            return True
        if raw.lower() in ("false", "0", "no"):
            return False
        raise BadConfig(f"{name}: expected a boolean, got {raw!r}")
    return raw


def parse_config_text(text: str) -> RunConfig:
    values: dict = {}
    for line_no, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise BadConfig(f"line {line_no}: expected 'key = value', got {stripped!r}")
        key, raw = (part.strip() for part in stripped.split("=", 1))
        if key not in _FIELDS:
            raise BadConfig(f"line {line_no}: unknown key {key!r}")
        if key in values:
            raise BadConfig(f"line {line_no}: duplicate key {key!r}")
        try:
            values[key] = _coerce(key, raw)
        except ValueError as exc:
            raise BadConfig(f"line {line_no}: bad value for {key!r}: {exc}") from exc
    for required in ("epochs", "seed"):
        if required not in values:
            raise BadConfig(f"missing required key {required!r}")
    cfg = RunConfig(**values)
    cfg.validate()
    return cfg


def load_config(path: str | Path) -> RunConfig:
    return parse_config_text(Path(path).read_text(encoding="utf-8"))


def format_config(cfg: RunConfig) -> str:
    lines = [f"{f.name} = {getattr(cfg, f.name)}" for f in dataclasses.fields(RunConfig)]
    return "\n".join(lines) + "\n"


def apply_overrides(cfg: RunConfig, assignments: list[str]) -> RunConfig:
    """Apply 'key=value' overrides (CLI --set) on top of a config."""
    updates: dict = {}
    for item in assignments:
        if "=" not in item:
            raise BadConfig(f"override must look like key=value, got {item!r}")
        key, raw = (part.strip() for part in item.split("=", 1))
        if key not in _FIELDS:
            raise BadConfig(f"unknown config key {key!r}")
        updates[key] = _coerce(key, raw)
    out = dataclasses.replace(cfg, **updates)
    out.validate()
    return out
