"""Pipeline configuration: one TOML file, CLI-flag overrides.

Defaults reproduce the published training constants where the method states
them (512 patch, 50% overlap, 17,000 samples per epoch, 0.5 threshold,
40-epoch schedule); everything else is a documented engine default.
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib

from .augment import AugmentationConfig
from .losses import LossConfig, LrScheduleConfig


@dataclass(frozen=True)
class PipelineConfig:
    patch_size: int = 512
    stride: int = 256
    kernel_sigma: float = 64.0
    threshold: float = 0.5
    samples_per_epoch: int = 17000
    weight_floor: float = 0.05
    seed: int = 0
    workers: int = 1
    scorer_timeout: float = 60.0
    augmentation: AugmentationConfig = field(default_factory=AugmentationConfig)
    loss: LossConfig = field(default_factory=LossConfig)
    schedule: LrScheduleConfig = field(default_factory=LrScheduleConfig)

    def __post_init__(self):
        if self.patch_size < 1:
            raise ValueError("patch_size must be >= 1")
        if not 1 <= self.stride <= self.patch_size:
            raise ValueError("stride must be in [1, patch_size]")
        if self.kernel_sigma <= 0:
            raise ValueError("kernel_sigma must be > 0")
        if not 0.0 <= self.threshold <= 1.0:
            raise ValueError("threshold must be in [0, 1]")
        if self.samples_per_epoch < 1:
            raise ValueError("samples_per_epoch must be >= 1")
        if self.weight_floor <= 0:
            raise ValueError("weight_floor must be > 0")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")
        if self.scorer_timeout <= 0:
            raise ValueError("scorer_timeout must be > 0")


def _build_section(cls, table: dict):
    known = {f.name for f in fields(cls)}
    unknown = set(table) - known
    if unknown:
        raise ValueError(f"unknown {cls.__name__} keys: {sorted(unknown)}")
    coerced = {}
    for key, value in table.items():
        coerced[key] = tuple(value) if isinstance(value, list) else value
    return cls(**coerced)


def load_config(path) -> PipelineConfig:
    """Parse a TOML config file; sections augmentation/loss/schedule are nested."""
    with open(path, "rb") as fh:
        doc = tomllib.load(fh)
    return config_from_dict(doc)


def config_from_dict(doc: dict) -> PipelineConfig:
    doc = dict(doc)
    kwargs = {}
    if "augmentation" in doc:
        kwargs["augmentation"] = _build_section(AugmentationConfig, doc.pop("augmentation"))
    if "loss" in doc:
        kwargs["loss"] = _build_section(LossConfig, doc.pop("loss"))
    if "schedule" in doc:
        kwargs["schedule"] = _build_section(LrScheduleConfig, doc.pop("schedule"))
    top_known = {f.name for f in fields(PipelineConfig)}
    unknown = set(doc) - top_known
    if unknown:
        raise ValueError(f"unknown config keys: {sorted(unknown)}")
    kwargs.update(doc)
    return PipelineConfig(**kwargs)
