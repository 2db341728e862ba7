"""Columnar dataset model: sensor statistics and Boolean failure indicators.

Rows are heater-days (or any unit/day pair). Sensor columns hold one daily
statistic of one sensor as float64 with NaN for missing cells; failure
columns are plain Boolean arrays where an absent record reads as 0.
"""

from __future__ import annotations

import datetime as _dt
import enum
from dataclasses import dataclass, field
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from .errors import DataError, DegenerateDataError

__all__ = [
    "Statistic",
    "RecordKey",
    "SensorColumn",
    "FailureColumn",
    "BoolColumn",
    "Dataset",
    "as_bool_column",
    "class_proportions",
    "project",
]


class Statistic(str, enum.Enum):
    MIN = "min"
    MAX = "max"
    AVG = "avg"
    RANGE = "range"

    @classmethod
    def parse(cls, value: "str | Statistic") -> "Statistic":
        if isinstance(value, Statistic):
            return value
        try:
            return cls(str(value).strip().lower())
        except ValueError:
            names = ", ".join(s.value for s in cls)
            raise DataError(f"unknown statistic {value!r} (expected one of {names})") from None


class RecordKey(NamedTuple):
    unit_id: str
    date: _dt.date


@dataclass(frozen=True, eq=False)
class SensorColumn:
    name: str
    statistic: Statistic
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim != 1:
            raise DataError(f"sensor column {self.name!r} must be one-dimensional")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "statistic", Statistic.parse(self.statistic))

    @property
    def key(self) -> tuple[str, Statistic]:
        return (self.name, self.statistic)

    def __len__(self) -> int:
        return len(self.values)

    def __eq__(self, other):
        if not isinstance(other, SensorColumn):
            return NotImplemented
        return (self.key == other.key
                and np.array_equal(self.values, other.values, equal_nan=True))

    def take(self, idx) -> "SensorColumn":
        return SensorColumn(self.name, self.statistic, self.values[idx])


@dataclass(frozen=True, eq=False)
class FailureColumn:
    name: str
    values: np.ndarray

    def __post_init__(self):
        raw = np.asarray(self.values)
        if raw.ndim != 1:
            raise DataError(f"failure column {self.name!r} must be one-dimensional")
        values = raw.astype(bool)
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    def __len__(self) -> int:
        return len(self.values)

    def __eq__(self, other):
        if not isinstance(other, FailureColumn):
            return NotImplemented
        return self.name == other.name and np.array_equal(self.values, other.values)

    def take(self, idx) -> "FailureColumn":
        return FailureColumn(self.name, self.values[idx])


class BoolColumn(NamedTuple):
    """Boolean column with optional missing cells.

    ``valid`` is ``None`` when every cell is present.
    """

    values: np.ndarray
    valid: np.ndarray | None = None

    def __len__(self) -> int:
        return len(self.values)

    def to_list(self) -> list:
        out = [bool(v) for v in self.values]
        if self.valid is not None:
            out = [v if ok else None for v, ok in zip(out, self.valid)]
        return out


def as_bool_column(col) -> BoolColumn:
    """Coerce a sequence, array, FailureColumn or BoolColumn to a BoolColumn.

    ``None`` and NaN entries become missing cells.
    """
    if isinstance(col, BoolColumn):
        return col
    if isinstance(col, FailureColumn):
        return BoolColumn(col.values)
    arr = np.asarray(col)
    if arr.dtype == bool:
        return BoolColumn(arr)
    if arr.dtype == object:
        valid = np.array([v is not None and not (isinstance(v, float) and np.isnan(v))
                          for v in arr], dtype=bool)
        values = np.array([bool(v) if ok else False for v, ok in zip(arr, valid)], dtype=bool)
    else:
        fl = arr.astype(np.float64)
        valid = ~np.isnan(fl)
        values = np.where(valid, fl, 0.0) != 0.0
    return BoolColumn(values, None if valid.all() else valid)


@dataclass(frozen=True)
class Dataset:
    """Immutable table of records keyed by (unit, date).

    ``sensors`` is keyed by ``(name, statistic)`` and ``failures`` by name.
    """

    keys: tuple[RecordKey, ...]
    sensors: dict[tuple[str, Statistic], SensorColumn] = field(default_factory=dict)
    failures: dict[str, FailureColumn] = field(default_factory=dict)

    def __post_init__(self):
        keys = tuple(RecordKey(str(u), d) for u, d in self.keys)
        object.__setattr__(self, "keys", keys)
        n = len(keys)
        sensors = {}
        for col in _iter_columns(self.sensors):
            if col.key in sensors:
                raise DataError(f"duplicate sensor column {col.name}/{col.statistic.value}")
            sensors[col.key] = col
        failures = {}
        for col in _iter_columns(self.failures):
            if col.name in failures:
                raise DataError(f"duplicate failure column {col.name!r}")
            failures[col.name] = col
        clash = {name for name, _ in sensors} & set(failures)
        if clash:
            raise DataError(f"column names used for both sensors and failures: {sorted(clash)}")
        for col in list(sensors.values()) + list(failures.values()):
            if len(col) != n:
                raise DataError(f"column {col.name!r} has {len(col)} values, expected {n}")
        object.__setattr__(self, "sensors", sensors)
        object.__setattr__(self, "failures", failures)

    def __len__(self) -> int:
        return len(self.keys)

    def sensor(self, name: str, statistic) -> SensorColumn:
        key = (name, Statistic.parse(statistic))
        try:
            return self.sensors[key]
        except KeyError:
            raise DataError(f"unknown sensor column {name!r} ({key[1].value})") from None

    def failure(self, name: str) -> FailureColumn:
        try:
            return self.failures[name]
        except KeyError:
            raise DataError(f"unknown failure column {name!r}") from None

    def sensors_for(self, statistic) -> list[SensorColumn]:
        stat = Statistic.parse(statistic)
        return sorted((c for c in self.sensors.values() if c.statistic is stat),
                      key=lambda c: c.name)

    def take(self, idx: Sequence[int]) -> "Dataset":
        """Rows at ``idx`` in that order; indices may repeat."""
        idx = np.asarray(idx, dtype=np.intp)
        return Dataset(
            keys=tuple(self.keys[i] for i in idx),
            sensors={k: c.take(idx) for k, c in self.sensors.items()},
            failures={k: c.take(idx) for k, c in self.failures.items()},
        )

    def restrict_failures(self, names: Iterable[str]) -> "Dataset":
        names = list(names)
        return Dataset(self.keys, dict(self.sensors),
                       {n: self.failure(n) for n in names})


def _iter_columns(cols):
    if isinstance(cols, dict):
        return list(cols.values())
    return list(cols)


def class_proportions(f) -> tuple[float, float]:
    """Return ``(p0, p1)``, the shares of normal and failure rows."""
    values = f.values if isinstance(f, FailureColumn) else np.asarray(f)
    n = len(values)
    if n == 0:
        raise DegenerateDataError("empty column")
    ones = int(np.count_nonzero(values))
    return (n - ones) / n, ones / n


def project(d: Dataset, sensor_name: str, statistic, failure_name: str
            ) -> tuple[SensorColumn, FailureColumn]:
    """Pair one sensor statistic with one failure column, dropping missing rows."""
    s = d.sensor(sensor_name, statistic)
    f = d.failure(failure_name)
    keep = ~np.isnan(s.values)
    if not keep.any():
        raise DataError(f"no usable rows for {sensor_name!r} ({s.statistic.value})")
    if keep.all():
        return s, f
    return s.take(keep), f.take(keep)
