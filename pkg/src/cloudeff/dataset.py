"""Telemetry datasets: CSV ingestion, synthetic generation, splitting, scaling.

Columns follow a fixed canonical order. ``instructions_executed`` is optional
and, when present, sits between ``power_consumption`` and ``execution_time``.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ._rng import make_rng

CPU = "cpu_usage"
MEMORY = "memory_usage"
NETWORK = "network_traffic"
POWER = "power_consumption"
INSTRUCTIONS = "instructions_executed"
EXEC_TIME = "execution_time"
TARGET = "energy_efficiency"

ALL_FEATURES = (CPU, MEMORY, NETWORK, POWER, INSTRUCTIONS, EXEC_TIME)
BASE_FEATURES = tuple(c for c in ALL_FEATURES if c != INSTRUCTIONS)

# Uniform draw ranges for the synthetic generator.
SYNTH_RANGES = {
    CPU: (0.0, 100.0),
    MEMORY: (0.0, 100.0),
    NETWORK: (0.0, 1000.0),
    POWER: (50.0, 500.0),
    INSTRUCTIONS: (1e3, 1e6),
    EXEC_TIME: (0.0, 100.0),
}
SYNTH_NOISE_STD = 0.05


class DatasetError(ValueError):
    """Base class for malformed or invalid data."""


class SchemaError(DatasetError):
    pass


class ParseError(DatasetError):
    pass


class RangeError(DatasetError):
    pass


def feature_names_for(has_instructions):
    return ALL_FEATURES if has_instructions else BASE_FEATURES


@dataclass(frozen=True)
class Sample:
    cpu_usage: float
    memory_usage: float
    network_traffic: float
    power_consumption: float
    execution_time: float
    energy_efficiency: float
    instructions_executed: float | None = None


@dataclass(frozen=True, eq=False)
class Dataset:
    """An ordered, immutable collection of telemetry samples.

    Parameters
    ----------
    features : ndarray of shape (n_samples, n_features)
        Feature matrix, columns in ``feature_names`` order.
    target : ndarray of shape (n_samples,)
        Energy-efficiency values in [0, 1].
    feature_names : tuple of str
        Either the six base columns or all seven canonical columns.
    """

    features: np.ndarray
    target: np.ndarray
    feature_names: tuple

    def __post_init__(self):
        features = np.array(self.features, dtype=np.float64, ndmin=2, copy=True)
        target = np.array(self.target, dtype=np.float64, ndmin=1, copy=True)
        names = tuple(self.feature_names)
        if names not in (ALL_FEATURES, BASE_FEATURES):
            raise SchemaError(f"unsupported feature columns: {list(names)}")
        if features.shape != (target.shape[0], len(names)):
            raise SchemaError(
                f"feature matrix shape {features.shape} does not match "
                f"{target.shape[0]} targets x {len(names)} features"
            )
        if not (np.all(np.isfinite(features)) and np.all(np.isfinite(target))):
            raise RangeError("non-finite value in dataset")
        if np.any((target < 0.0) | (target > 1.0)):
            bad = int(np.flatnonzero((target < 0.0) | (target > 1.0))[0])
            raise RangeError(f"{TARGET} outside [0, 1] at sample {bad}: {target[bad]!r}")
        features.flags.writeable = False
        target.flags.writeable = False
        object.__setattr__(self, "features", features)
        object.__setattr__(self, "target", target)
        object.__setattr__(self, "feature_names", names)

    def __len__(self):
        return self.target.shape[0]

    def __eq__(self, other):
        if not isinstance(other, Dataset):
            return NotImplemented
        return (
            self.feature_names == other.feature_names
            and np.array_equal(self.features, other.features)
            and np.array_equal(self.target, other.target)
        )

    @property
    def has_instructions(self):
        return INSTRUCTIONS in self.feature_names

    @property
    def n_features(self):
        return len(self.feature_names)

    @property
    def columns(self):
        """All column names, target last."""
        return self.feature_names + (TARGET,)

    def column(self, name):
        if name == TARGET:
            return self.target
        return self.features[:, self.feature_names.index(name)]

    def sample(self, i):
        row = dict(zip(self.feature_names, (float(v) for v in self.features[i])))
        return Sample(energy_efficiency=float(self.target[i]), **row)

    @property
    def samples(self):
        return [self.sample(i) for i in range(len(self))]

    def subset(self, indices):
        idx = np.asarray(indices, dtype=np.intp)
        return Dataset(self.features[idx], self.target[idx], self.feature_names)

    @classmethod
    def from_samples(cls, samples):
        samples = list(samples)
        if not samples:
            raise DatasetError("no samples")
        has_instr = samples[0].instructions_executed is not None
        if any((s.instructions_executed is not None) != has_instr for s in samples):
            raise SchemaError("samples disagree on presence of instructions_executed")
        names = feature_names_for(has_instr)
        features = [[getattr(s, name) for name in names] for s in samples]
        target = [s.energy_efficiency for s in samples]
        return cls(np.array(features, dtype=np.float64), np.array(target), names)


def _format_float(value):
    return repr(float(value))


def write_csv(dataset, path):
    """Write ``dataset`` as canonical CSV with shortest round-trip floats."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(dataset.columns)
    for row, y in zip(dataset.features, dataset.target):
        writer.writerow([_format_float(v) for v in row] + [_format_float(y)])
    Path(path).write_text(buf.getvalue(), encoding="utf-8")


def load_csv(path):
    """Read a telemetry CSV into a :class:`Dataset`.

    The header must name every base column plus ``energy_efficiency``; the
    ``instructions_executed`` column is optional. Columns may appear in any
    order in the file. Errors carry the 1-based line number and column name.
    """
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise SchemaError("missing header row") from None
        known = set(ALL_FEATURES) | {TARGET}
        for name in header:
            if name not in known:
                raise SchemaError(f"unknown column: {name!r}")
        if len(set(header)) != len(header):
            raise SchemaError("duplicate column in header")
        for name in BASE_FEATURES + (TARGET,):
            if name not in header:
                raise SchemaError(f"missing column: {name!r}")
        names = feature_names_for(INSTRUCTIONS in header)
        positions = [header.index(n) for n in names]
        target_pos = header.index(TARGET)

        features, target = [], []
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not cell.strip() for cell in row):
                continue
            if len(row) != len(header):
                raise ParseError(f"line {lineno}: expected {len(header)} fields, got {len(row)}")
            values = []
            for col, cell in enumerate(row):
                try:
                    v = float(cell)
                except ValueError:
                    raise ParseError(f"line {lineno}, column {header[col]!r}: not a number: {cell!r}") from None
                if not math.isfinite(v):
                    raise ParseError(f"line {lineno}, column {header[col]!r}: non-finite value {cell!r}")
                values.append(v)
            y = values[target_pos]
            if not 0.0 <= y <= 1.0:
                raise RangeError(f"line {lineno}: {TARGET} {y!r} outside [0, 1]")
            features.append([values[p] for p in positions])
            target.append(y)

    if not target:
        raise DatasetError("no samples")
    return Dataset(np.array(features, dtype=np.float64), np.array(target, dtype=np.float64), names)


def synthesize(n, seed, include_instructions=False):
    """Generate ``n`` synthetic telemetry samples.

    Features are uniform over ``SYNTH_RANGES``. The target is

        clip(0.15 + 0.55*power' - 0.45*cpu' + 0.10*exec' + noise, 0, 1)

    where primes denote the feature rescaled to [0, 1] by its draw range and
    ``noise ~ Normal(0, 0.05)``. Output is a pure function of the arguments.
    """
    n = int(n)
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    rng = make_rng(seed, 0x5EED)
    names = feature_names_for(include_instructions)
    # Draw every column (including instructions) so the other columns do not
    # depend on the flag.
    draws = {}
    for name in ALL_FEATURES:
        lo, hi = SYNTH_RANGES[name]
        draws[name] = rng.uniform(lo, hi, size=n)
    noise = rng.normal(0.0, SYNTH_NOISE_STD, size=n)

    def unit(name):
        lo, hi = SYNTH_RANGES[name]
        return (draws[name] - lo) / (hi - lo)

    target = 0.15 + 0.55 * unit(POWER) - 0.45 * unit(CPU) + 0.10 * unit(EXEC_TIME) + noise
    target = np.clip(target, 0.0, 1.0)
    features = np.column_stack([draws[name] for name in names])
    return Dataset(features, target, names)


def split(dataset, test_fraction=0.2, seed=0):
    """Shuffle and partition into ``(train, test)``.

    The test side gets ``round(test_fraction * n)`` samples (half rounds up),
    clamped so each side keeps at least one sample.
    """
    if not 0.0 < test_fraction < 1.0:
        raise ValueError(f"test_fraction must lie in (0, 1), got {test_fraction}")
    n = len(dataset)
    if n < 2:
        raise ValueError("split needs at least 2 samples")
    n_test = min(max(int(math.floor(test_fraction * n + 0.5)), 1), n - 1)
    perm = make_rng(seed, 0x5B117).permutation(n)
    return dataset.subset(perm[n_test:]), dataset.subset(perm[:n_test])


@dataclass(frozen=True, eq=False)
class Scaler:
    """Per-feature min-max scaler learned from a training split."""

    minimum: np.ndarray
    maximum: np.ndarray

    def __post_init__(self):
        lo = np.array(self.minimum, dtype=np.float64, ndmin=1)
        hi = np.array(self.maximum, dtype=np.float64, ndmin=1)
        if lo.shape != hi.shape:
            raise ValueError("minimum and maximum must have the same length")
        if np.any(lo > hi):
            raise ValueError("scaler minimum exceeds maximum")
        lo.flags.writeable = False
        hi.flags.writeable = False
        object.__setattr__(self, "minimum", lo)
        object.__setattr__(self, "maximum", hi)

    def transform(self, features):
        x = np.asarray(features, dtype=np.float64)
        span = self.maximum - self.minimum
        safe = np.where(span > 0.0, span, 1.0)
        return np.where(span > 0.0, (x - self.minimum) / safe, 0.0)

    def to_dict(self):
        return {"min": [float(v) for v in self.minimum], "max": [float(v) for v in self.maximum]}

    @classmethod
    def from_dict(cls, data):
        return cls(np.array(data["min"], dtype=np.float64), np.array(data["max"], dtype=np.float64))


def fit_scaler(train):
    if len(train) == 0:
        raise ValueError("cannot fit a scaler on an empty dataset")
    return Scaler(train.features.min(axis=0), train.features.max(axis=0))


def apply_scaler(scaler, dataset):
    """Scale features linearly; values outside the training range are not clamped."""
    if scaler.minimum.shape[0] != dataset.n_features:
        raise ValueError(
            f"scaler expects {scaler.minimum.shape[0]} features, dataset has {dataset.n_features}"
        )
    return Dataset(scaler.transform(dataset.features), dataset.target, dataset.feature_names)

