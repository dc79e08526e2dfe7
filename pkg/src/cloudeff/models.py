"""Model files and run configuration.

Both model kinds are stored as JSON. Floats are written with ``repr`` so
thresholds, leaf values and weights survive a round trip exactly.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from . import neural
from .dataset import Scaler, apply_scaler
from .forest import ForestConfig, ForestModel
from .hloa import HLOAConfig

RF = "rf"
HLOA = "hloa-cnn-bigru"
MODEL_KINDS = (RF, HLOA)
FORMAT_VERSION = 1


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class NetConfig:
    filters: int = 3
    kernel: int = 3
    hidden: int = 4
    padding: str = "same"

    def spec(self, p):
        return neural.NetSpec(p=p, filters=self.filters, kernel=self.kernel, hidden=self.hidden, padding=self.padding)


@dataclass(frozen=True)
class OptimizerConfig:
    pop_size: int = 30
    max_evaluations: int = 6000
    p_crypsis: float = 0.4
    p_blood_squirt: float = 0.3
    p_escape: float = 0.3
    restart_fraction: float = 0.1
    sigma_start: float = 0.2
    sigma_end: float = 0.01
    weight_bound: float = 3.0

    def hloa_config(self, seed):
        d = asdict(self)
        d.pop("weight_bound")
        return HLOAConfig(seed=seed, **d)


@dataclass(frozen=True)
class ForestSection:
    n_trees: int = 100
    max_depth: int | None = 12
    min_samples_leaf: int = 2
    mtry: int | None = None
    bootstrap: bool = True

    def forest_config(self, seed):
        return ForestConfig(seed=seed, **asdict(self))


@dataclass(frozen=True)
class RunConfig:
    """Everything a ``train`` run depends on besides the data file."""

    seed: int = 0
    test_fraction: float = 0.2
    forest: ForestSection = field(default_factory=ForestSection)
    net: NetConfig = field(default_factory=NetConfig)
    optimizer: OptimizerConfig = field(default_factory=OptimizerConfig)

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, data):
        if "config" in data and isinstance(data["config"], dict):
            data = data["config"]  # a run manifest
        sections = {"forest": ForestSection, "net": NetConfig, "optimizer": OptimizerConfig}
        kwargs = {}
        allowed = {f.name for f in fields(cls)}
        for key, value in data.items():
            if key not in allowed:
                raise ConfigError(f"unknown config key: {key!r}")
            if key in sections:
                if not isinstance(value, dict):
                    raise ConfigError(f"config section {key!r} must be an object")
                known = {f.name for f in fields(sections[key])}
                for sub in value:
                    if sub not in known:
                        raise ConfigError(f"unknown config key: {key}.{sub}")
                kwargs[key] = sections[key](**value)
            else:
                kwargs[key] = value
        try:
            return cls(**kwargs)
        except TypeError as exc:
            raise ConfigError(str(exc)) from None


def load_config(path):
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON: {exc}") from None
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: top level must be an object")
    return RunConfig.from_dict(data)


def dump_json(obj, path):
    Path(path).write_text(json.dumps(obj, indent=1, sort_keys=False, allow_nan=False) + "\n", encoding="utf-8")


@dataclass(frozen=True, eq=False)
class NetModel:
    spec: neural.NetSpec
    scaler: Scaler
    params: np.ndarray
    feature_names: tuple
    training_fitness: float

    def predict(self, dataset):
        scaled = apply_scaler(self.scaler, dataset)
        return neural.predict(self.spec, self.params, scaled.features)

    def to_dict(self):
        return {
            "format": FORMAT_VERSION,
            "kind": HLOA,
            "feature_names": list(self.feature_names),
            "net": self.spec.to_dict(),
            "scaler": self.scaler.to_dict(),
            "params": [float(v) for v in self.params],
            "training_fitness": self.training_fitness,
        }

    @classmethod
    def from_dict(cls, data):
        spec = neural.NetSpec.from_dict(data["net"])
        params = np.array(data["params"], dtype=np.float64)
        neural.unflatten(spec, params)  # length check
        return cls(spec, Scaler.from_dict(data["scaler"]), params, tuple(data["feature_names"]),
                   float(data["training_fitness"]))


@dataclass(frozen=True, eq=False)
class RFModel:
    forest: ForestModel
    feature_names: tuple
    training_fitness: float

    def predict(self, dataset):
        return self.forest.predict(dataset.features)

    def to_dict(self):
        d = {"format": FORMAT_VERSION, "kind": RF, "feature_names": list(self.feature_names),
             "training_fitness": self.training_fitness}
        d.update(self.forest.to_dict())
        return d

    @classmethod
    def from_dict(cls, data):
        return cls(ForestModel.from_dict(data), tuple(data["feature_names"]), float(data["training_fitness"]))


def save_model(model, path):
    dump_json(model.to_dict(), path)


def load_model(path):
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    kind = data.get("kind")
    if kind == RF:
        return RFModel.from_dict(data)
    if kind == HLOA:
        return NetModel.from_dict(data)
    raise ConfigError(f"{path}: unknown model kind {kind!r}")
