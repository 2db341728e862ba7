"""CSV loading, cleaning and per-failure balancing."""

from __future__ import annotations

import csv
import datetime as _dt
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np
import yaml

from .data import Dataset, FailureColumn, RecordKey, SensorColumn, Statistic
from .errors import DataError, SchemaError

__all__ = [
    "SensorSpec",
    "SchemaConfig",
    "BalancedDataset",
    "load_schema",
    "load_csv",
    "deduplicate",
    "filter_corrupt",
    "balance",
    "prepare",
    "dump_csv",
]

_TRUE = {"1", "true"}
_FALSE = {"0", "false", ""}


@dataclass(frozen=True)
class SensorSpec:
    name: str
    statistic: Statistic
    column: str = ""

    def __post_init__(self):
        object.__setattr__(self, "statistic", Statistic.parse(self.statistic))
        if not self.column:
            object.__setattr__(self, "column", f"{self.name}_{self.statistic.value}")


@dataclass(frozen=True)
class SchemaConfig:
    unit_column: str
    date_column: str
    sensor_columns: tuple[SensorSpec, ...]
    failure_columns: tuple[str, ...]
    # keyed by CSV column name
    plausibility_ranges: dict[str, tuple[float, float]] = field(default_factory=dict)
    learner: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        sensors = tuple(s if isinstance(s, SensorSpec) else _sensor_spec(s)
                        for s in self.sensor_columns)
        object.__setattr__(self, "sensor_columns", sensors)
        object.__setattr__(self, "failure_columns", tuple(self.failure_columns))
        sensor_names = {s.name for s in sensors}
        overlap = sensor_names & set(self.failure_columns)
        if overlap:
            raise SchemaError(f"names used as both sensor and failure: {sorted(overlap)}")
        columns = [s.column for s in sensors]
        if len(set(columns)) != len(columns):
            raise SchemaError("duplicate sensor column names in schema")
        if len({s.column for s in sensors} | set(self.failure_columns)) != \
                len(columns) + len(self.failure_columns):
            raise SchemaError("a CSV column is mapped to both a sensor and a failure")
        if len({(s.name, s.statistic) for s in sensors}) != len(sensors):
            raise SchemaError("duplicate (sensor, statistic) pair in schema")
        ranges = {}
        for name, bounds in dict(self.plausibility_ranges).items():
            lo, hi = (float(b) for b in bounds)
            if not lo < hi:
                raise SchemaError(f"plausibility range for {name!r} needs lo < hi, got ({lo}, {hi})")
            ranges[name] = (lo, hi)
        unknown = set(ranges) - {s.column for s in sensors} - {s.name for s in sensors}
        if unknown:
            raise SchemaError(f"plausibility ranges for unknown sensors: {sorted(unknown)}")
        object.__setattr__(self, "plausibility_ranges", ranges)

    @classmethod
    def from_dict(cls, doc: dict) -> "SchemaConfig":
        if not isinstance(doc, dict):
            raise SchemaError("schema document must be a mapping")
        try:
            return cls(
                unit_column=doc["unit_column"],
                date_column=doc["date_column"],
                sensor_columns=tuple(doc.get("sensor_columns") or ()),
                failure_columns=tuple(doc.get("failure_columns") or ()),
                plausibility_ranges=doc.get("plausibility_ranges") or {},
                learner=doc.get("learner") or {},
            )
        except KeyError as exc:
            raise SchemaError(f"schema is missing required key {exc.args[0]!r}") from None

    def to_dict(self) -> dict:
        return {
            "unit_column": self.unit_column,
            "date_column": self.date_column,
            "sensor_columns": [{"name": s.name, "statistic": s.statistic.value,
                                "column": s.column} for s in self.sensor_columns],
            "failure_columns": list(self.failure_columns),
            "plausibility_ranges": {k: list(v) for k, v in self.plausibility_ranges.items()},
            "learner": dict(self.learner),
        }


def _sensor_spec(entry) -> SensorSpec:
    if isinstance(entry, dict):
        try:
            return SensorSpec(entry["name"], entry["statistic"], entry.get("column", ""))
        except KeyError as exc:
            raise SchemaError(f"sensor entry {entry!r} is missing {exc.args[0]!r}") from None
    if isinstance(entry, (list, tuple)) and len(entry) in (2, 3):
        return SensorSpec(*entry)
    raise SchemaError(f"cannot read sensor entry {entry!r}")


def load_schema(path) -> SchemaConfig:
    """Read a YAML (or JSON, which is valid YAML) schema file."""
    try:
        doc = yaml.safe_load(Path(path).read_text(encoding="utf-8"))
    except yaml.YAMLError as exc:
        raise SchemaError(f"{path}: {exc}") from None
    return SchemaConfig.from_dict(doc)


@dataclass(frozen=True)
class BalancedDataset:
    """Failure rows paired with their most recent prior normal row.

    ``base`` holds the rows as ``[f0, n0, f1, n1, ...]``; ``pairing`` maps each
    failure row index in ``base`` to its partner's index. ``source_rows`` gives
    the originating row of every base row in the unbalanced dataset.
    """

    base: Dataset
    failure_name: str
    pairing: dict[int, int]
    source_rows: tuple[int, ...]
    dropped: tuple[int, ...] = ()

    def __len__(self) -> int:
        return len(self.base)

    @property
    def failure(self) -> FailureColumn:
        return self.base.failure(self.failure_name)


def _parse_float(text: str) -> float:
    try:
        return float(text)
    except ValueError:
        return math.nan


def load_csv(path, schema: SchemaConfig) -> Dataset:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise SchemaError(f"{path}: empty file, no header row") from None
        index = {name: i for i, name in enumerate(header)}
        required = [schema.unit_column, schema.date_column,
                    *(s.column for s in schema.sensor_columns), *schema.failure_columns]
        missing = [c for c in required if c not in index]
        if missing:
            raise SchemaError(f"{path}: missing required column(s): {', '.join(missing)}")

        keys = []
        sensor_vals: list[list[float]] = [[] for _ in schema.sensor_columns]
        failure_vals: list[list[bool]] = [[] for _ in schema.failure_columns]
        ui, di = index[schema.unit_column], index[schema.date_column]
        for rowno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) < len(header):
                row = row + [""] * (len(header) - len(row))
            try:
                date = _dt.date.fromisoformat(row[di].strip())
            except ValueError:
                raise DataError(f"{path}: row {rowno}: bad date {row[di]!r}") from None
            keys.append(RecordKey(row[ui].strip(), date))
            for j, spec in enumerate(schema.sensor_columns):
                sensor_vals[j].append(_parse_float(row[index[spec.column]]))
            for j, name in enumerate(schema.failure_columns):
                cell = row[index[name]].strip().lower()
                if cell in _TRUE:
                    failure_vals[j].append(True)
                elif cell in _FALSE:
                    failure_vals[j].append(False)
                else:
                    raise DataError(f"{path}: row {rowno}: malformed failure cell "
                                    f"{row[index[name]]!r} in column {name!r}")

    return Dataset(
        keys=tuple(keys),
        sensors=[SensorColumn(s.name, s.statistic, np.array(v, dtype=np.float64))
                 for s, v in zip(schema.sensor_columns, sensor_vals)],
        failures=[FailureColumn(name, np.array(v, dtype=bool))
                  for name, v in zip(schema.failure_columns, failure_vals)],
    )


def deduplicate(d: Dataset) -> Dataset:
    """Keep the first record for each (unit, date) key."""
    seen = set()
    keep = []
    for i, key in enumerate(d.keys):
        if key not in seen:
            seen.add(key)
            keep.append(i)
    if len(keep) == len(d):
        return d
    return d.take(keep)


def filter_corrupt(d: Dataset, schema: SchemaConfig) -> Dataset:
    """Drop rows whose configured sensors fall outside their plausible range.

    Missing cells never trigger removal. Sensors without a range are untouched.
    """
    if not schema.plausibility_ranges:
        return d
    bad = np.zeros(len(d), dtype=bool)
    for spec in schema.sensor_columns:
        bounds = schema.plausibility_ranges.get(spec.column)
        if bounds is None:
            bounds = schema.plausibility_ranges.get(spec.name)
        if bounds is None or (spec.name, spec.statistic) not in d.sensors:
            continue
        lo, hi = bounds
        v = d.sensor(spec.name, spec.statistic).values
        with np.errstate(invalid="ignore"):
            bad |= (v < lo) | (v > hi)
    if not bad.any():
        return d
    return d.take(np.flatnonzero(~bad))


def balance(d: Dataset, failure_name: str) -> BalancedDataset:
    """Pair every failure row with the same unit's latest strictly earlier normal row.

    Failure rows without such a partner are dropped. A normal row may serve
    several failures; it is then materialized once per pairing.
    """
    f = d.failure(failure_name).values
    if not f.any():
        raise DataError(f"no positive examples for {failure_name!r}")

    by_unit: dict[str, list[int]] = {}
    for i, key in enumerate(d.keys):
        by_unit.setdefault(key.unit_id, []).append(i)

    matches: dict[int, int] = {}
    for rows in by_unit.values():
        # stable sort keeps file order among equal dates
        rows.sort(key=lambda i: d.keys[i].date)
        last_normal = None  # (date, row) of latest normal strictly before current date
        pending_normal = None
        current_date = None
        for i in rows:
            date = d.keys[i].date
            if date != current_date:
                if pending_normal is not None:
                    last_normal = pending_normal
                    pending_normal = None
                current_date = date
            if f[i]:
                if last_normal is not None:
                    matches[i] = last_normal
            elif pending_normal is None:
                pending_normal = i

    failure_rows = np.flatnonzero(f)
    order = []
    pairing = {}
    dropped = []
    for i in failure_rows:
        i = int(i)
        if i not in matches:
            dropped.append(i)
            continue
        pairing[len(order)] = len(order) + 1
        order.extend((i, matches[i]))

    base = d.take(order).restrict_failures([failure_name])
    return BalancedDataset(base=base, failure_name=failure_name, pairing=pairing,
                           source_rows=tuple(order), dropped=tuple(dropped))


def prepare(path, schema: SchemaConfig) -> Dataset:
    """Load, deduplicate and filter in one step."""
    return filter_corrupt(deduplicate(load_csv(path, schema)), schema)


def dump_csv(d: Dataset, path, schema: SchemaConfig) -> None:
    """Write ``d`` in the layout ``schema`` describes; missing cells are left empty."""
    sensors = [(spec.column, d.sensor(spec.name, spec.statistic).values)
               for spec in schema.sensor_columns]
    failures = [(name, d.failure(name).values) for name in schema.failure_columns]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([schema.unit_column, schema.date_column,
                    *(c for c, _ in sensors), *(c for c, _ in failures)])
        for i, key in enumerate(d.keys):
            row = [key.unit_id, key.date.isoformat()]
            row += ["" if math.isnan(v[i]) else repr(float(v[i])) for _, v in sensors]
            row += ["1" if v[i] else "0" for _, v in failures]
            w.writerow(row)
