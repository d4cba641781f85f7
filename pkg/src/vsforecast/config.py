"""Run configuration: JSON file plus CLI flag overrides, flags winning."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields

from .errors import ConfigError

_MODEL_NAMES = ("persistence", "mean", "linear_ar", "coupled_linear")


@dataclass
class DatasetConfig:
    path: str = ""
    scale: float = 1.0
    has_header: bool = True


@dataclass
class WindowConfig:
    p: int = 12
    q: int = 12
    stride: int = 1


@dataclass
class SplitConfig:
    train: float = 0.7
    val: float = 0.1
    test: float = 0.2


@dataclass
class ModelConfig:
    name: str = "linear_ar"
    params: dict = field(default_factory=dict)


@dataclass
class SubsetConfig:
    mode: str = "random"
    k_percent: float = 15.0
    c: int = 1
    eps: float = 0.3
    min_pts: int = 2
    seed: int = 0
    draws: int = 100


@dataclass
class RetrievalConfig:
    engine: str = "direct"
    exponent_b: float = 0.5
    m: int = 5
    fraction: float = 1.0


@dataclass
class EnsembleSection:
    enabled: bool = True
    scheme: str = "FDW"
    tau: float = 0.1


@dataclass
class IndexConfig:
    k_hat: int = 5
    u: float = 1.5
    max_rounds: int = 10


@dataclass
class OutputConfig:
    format: str = "json"
    path: str | None = None


@dataclass
class RunConfig:
    dataset: DatasetConfig = field(default_factory=DatasetConfig)
    windowing: WindowConfig = field(default_factory=WindowConfig)
    split: SplitConfig = field(default_factory=SplitConfig)
    model: ModelConfig = field(default_factory=ModelConfig)
    subset: SubsetConfig = field(default_factory=SubsetConfig)
    retrieval: RetrievalConfig = field(default_factory=RetrievalConfig)
    ensemble: EnsembleSection = field(default_factory=EnsembleSection)
    index: IndexConfig = field(default_factory=IndexConfig)
    output: OutputConfig = field(default_factory=OutputConfig)
    horizon_step: int | None = None

    def validate(self) -> "RunConfig":
        if not self.dataset.path:
            raise ConfigError("dataset.path is required")
        if self.dataset.scale <= 0:
            raise ConfigError("dataset.scale must be positive")
        if self.windowing.p < 1 or self.windowing.q < 1:
            raise ConfigError("windowing.p and windowing.q must be >= 1")
        if self.windowing.stride < 1:
            raise ConfigError("windowing.stride must be >= 1")
        total = self.split.train + self.split.val + self.split.test
        if (min(self.split.train, self.split.val, self.split.test) <= 0
                or abs(total - 1.0) > 1e-9):
            raise ConfigError("split fractions must be positive and sum to 1")
        if self.model.name not in _MODEL_NAMES:
            raise ConfigError(
                f"model.name must be one of {_MODEL_NAMES}, "
                f"got {self.model.name!r}")
        if self.subset.mode not in ("random", "correlated"):
            raise ConfigError("subset.mode must be 'random' or 'correlated'")
        if not 0 < self.subset.k_percent <= 100:
            raise ConfigError("subset.k_percent must be in (0, 100]")
        if self.subset.draws < 1:
            raise ConfigError("subset.draws must be >= 1")
        if self.retrieval.engine not in ("direct", "scalable"):
            raise ConfigError("retrieval.engine must be 'direct' or 'scalable'")
        if self.retrieval.exponent_b <= 0:
            raise ConfigError("retrieval.exponent_b must be positive")
        if self.retrieval.m < 1:
            raise ConfigError("retrieval.m must be >= 1")
        if not 0 < self.retrieval.fraction <= 1:
            raise ConfigError("retrieval.fraction must be in (0, 1]")
        if self.ensemble.scheme not in ("UW", "DDW", "FDW"):
            raise ConfigError("ensemble.scheme must be UW, DDW, or FDW")
        if self.ensemble.tau <= 0:
            raise ConfigError("ensemble.tau must be positive")
        if self.index.k_hat < 1:
            raise ConfigError("index.k_hat must be >= 1")
        if self.index.u <= 1:
            raise ConfigError("index.u must exceed 1")
        if self.index.max_rounds < 1:
            raise ConfigError("index.max_rounds must be >= 1")
        if self.output.format not in ("json", "csv", "text"):
            raise ConfigError("output.format must be json, csv, or text")
        if self.horizon_step is not None and self.horizon_step < 1:
            raise ConfigError("horizon_step must be >= 1")
        return self

    def to_dict(self) -> dict:
        return asdict(self)


_SECTIONS = {f.name: f.type for f in fields(RunConfig)}


def _fill_section(cls, data: dict, path: str):
    known = {f.name for f in fields(cls)}
    unknown = set(data) - known
    if unknown:
        raise ConfigError(
            f"unknown config keys under {path!r}: {sorted(unknown)}")
    return cls(**data)


def config_from_dict(data: dict) -> RunConfig:
    if not isinstance(data, dict):
        raise ConfigError("config root must be a JSON object")
    section_classes = {
        "dataset": DatasetConfig, "windowing": WindowConfig,
        "split": SplitConfig, "model": ModelConfig, "subset": SubsetConfig,
        "retrieval": RetrievalConfig, "ensemble": EnsembleSection,
        "index": IndexConfig, "output": OutputConfig,
    }
    unknown = set(data) - set(section_classes) - {"horizon_step"}
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    kwargs = {}
    for name, cls in section_classes.items():
        section = data.get(name, {})
        if not isinstance(section, dict):
            raise ConfigError(f"config section {name!r} must be an object")
        kwargs[name] = _fill_section(cls, section, name)
    return RunConfig(horizon_step=data.get("horizon_step"), **kwargs)


def load_config(path) -> RunConfig:
    with open(path, encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config file {path} is not valid JSON: {exc}")
    return config_from_dict(data)
