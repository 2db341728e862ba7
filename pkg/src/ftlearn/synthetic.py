"""Datasets drawn from a known fault tree, and scoring of learned trees against it."""

from __future__ import annotations

import datetime as _dt
import json
from dataclasses import dataclass, field

import numpy as np

from .data import Dataset, FailureColumn, RecordKey, SensorColumn, Statistic
from .errors import ConfigError, TreeParseError
from .fault_tree import EventKind, FaultTree, depth, tree_from_dict, tree_to_dict, validate
from .ingestion import SchemaConfig, SensorSpec
from .significance import GateType
from .threshold import Side

__all__ = [
    "SensorModel",
    "GroundTruth",
    "RecoveryReport",
    "generate",
    "recovery_report",
]

BLOCK_ROWS = 4096
START_DATE = _dt.date(2020, 1, 1)


@dataclass(frozen=True)
class SensorModel:
    """Uniform value ranges ``[lo, hi)`` for the failure and normal states."""

    failure: tuple[float, float]
    normal: tuple[float, float]

    def __post_init__(self):
        for name in ("failure", "normal"):
            lo, hi = (float(v) for v in getattr(self, name))
            if not lo < hi:
                raise ConfigError(f"{name} interval needs lo < hi, got ({lo}, {hi})")
            object.__setattr__(self, name, (lo, hi))


@dataclass
class GroundTruth:
    tree: FaultTree
    sensor_models: dict[str, SensorModel]
    label_noise: float = 0.0
    n_units: int = 100
    days_per_unit: int = 100
    decoys: int = 10
    decoy_range: tuple[float, float] = (0.0, 100.0)

    def __post_init__(self):
        validate(self.tree, max_inputs=None, check_significance=False)
        if not 0.0 <= self.label_noise < 0.5:
            raise ConfigError(f"label_noise must be in [0, 0.5), got {self.label_noise}")
        if self.n_units < 1 or self.days_per_unit < 1:
            raise ConfigError("n_units and days_per_unit must be positive")
        if self.decoys < 0:
            raise ConfigError("decoys must be non-negative")
        lo, hi = self.decoy_range
        if not lo < hi:
            raise ConfigError("decoy_range needs lo < hi")
        self.decoy_range = (float(lo), float(hi))
        self.sensor_models = {k: m if isinstance(m, SensorModel) else SensorModel(**m)
                              for k, m in self.sensor_models.items()}
        for ev in self.tree.events.values():
            if ev.kind is EventKind.TLE:
                continue
            if ev.kind is EventKind.BASIC and (ev.p is None or not 0.0 <= ev.p <= 1.0):
                raise ConfigError(f"basic event {ev.id!r} needs a firing probability in [0, 1]")
            model = self.sensor_models.get(ev.id)
            if model is None:
                raise ConfigError(f"no sensor model for {ev.id!r}")
            th = ev.threshold
            f_lo, f_hi = model.failure
            n_lo, n_hi = model.normal
            if th.failure_side is Side.LEQ:
                ok = f_hi <= th.theta < n_lo
            else:
                ok = n_hi <= th.theta < f_lo
            if not ok:
                raise ConfigError(f"intervals for {ev.id!r} do not sit on the sides of "
                                  f"theta={th.theta!r} ({th.failure_side.value})")
        unknown = set(self.sensor_models) - set(self.tree.events)
        if unknown:
            raise ConfigError(f"sensor models for unknown events: {sorted(unknown)}")
        if set(self.decoy_names) & self.tree.variables():
            raise ConfigError("decoy names clash with planted sensors")

    @property
    def statistic(self) -> Statistic:
        if self.tree.statistic is not None:
            return self.tree.statistic
        for ev in self.tree.events.values():
            if ev.threshold is not None:
                return ev.threshold.statistic
        return Statistic.MIN

    @property
    def decoy_names(self) -> list[str]:
        return [f"decoy_{k:02d}" for k in range(self.decoys)]

    @property
    def failure_name(self) -> str:
        return self.tree.tle

    def planted(self) -> list:
        """Thresholded events (basic and intermediate), sorted by id."""
        return sorted((e for e in self.tree.events.values() if e.threshold is not None),
                      key=lambda e: e.id)

    def schema(self) -> SchemaConfig:
        sensors = [SensorSpec(e.threshold.sensor_name, e.threshold.statistic)
                   for e in self.planted()]
        sensors += [SensorSpec(name, self.statistic) for name in self.decoy_names]
        return SchemaConfig("unit", "date", tuple(sensors), (self.failure_name,))

    def to_dict(self) -> dict:
        doc = tree_to_dict(self.tree)
        doc["sensor_models"] = {k: {"failure": list(m.failure), "normal": list(m.normal)}
                                for k, m in sorted(self.sensor_models.items())}
        doc.update(label_noise=self.label_noise, n_units=self.n_units,
                   days_per_unit=self.days_per_unit, decoys=self.decoys,
                   decoy_range=list(self.decoy_range))
        return doc

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, ensure_ascii=False) + "\n"

    @classmethod
    def from_dict(cls, doc: dict) -> "GroundTruth":
        tree = tree_from_dict(doc)
        models = doc.get("sensor_models")
        if not isinstance(models, dict):
            raise TreeParseError("$.sensor_models: expected an object")
        try:
            parsed = {k: SensorModel(tuple(v["failure"]), tuple(v["normal"]))
                      for k, v in models.items()}
        except (KeyError, TypeError) as exc:
            raise TreeParseError(f"$.sensor_models: {exc!r}") from None
        return cls(tree, parsed,
                   label_noise=float(doc.get("label_noise", 0.0)),
                   n_units=int(doc.get("n_units", 100)),
                   days_per_unit=int(doc.get("days_per_unit", 100)),
                   decoys=int(doc.get("decoys", 10)),
                   decoy_range=tuple(doc.get("decoy_range", (0.0, 100.0))))

    @classmethod
    def from_json(cls, text: str) -> "GroundTruth":
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise TreeParseError(f"line {exc.lineno} column {exc.colno}: {exc.msg}") from None
        return cls.from_dict(doc)


def _propagate(tree: FaultTree, states: dict[str, np.ndarray], event_id: str) -> np.ndarray:
    if event_id in states:
        return states[event_id]
    gate = tree.gate_for(event_id)
    ins = [_propagate(tree, states, c) for c in gate.inputs]
    op = np.logical_and if gate.type is GateType.AND else np.logical_or
    out = ins[0]
    for x in ins[1:]:
        out = op(out, x)
    states[event_id] = out
    return out


def _block(gt: GroundTruth, seed: int, block: int, n: int):
    # each block draws from its own stream, so blocks are order independent
    rng = np.random.default_rng([seed, block])
    tree = gt.tree
    states = {}
    for ev in sorted(tree.basic_events(), key=lambda e: e.id):
        states[ev.id] = rng.random(n) < ev.p
    label = _propagate(tree, states, tree.tle).copy()
    flip = rng.random(n) < gt.label_noise
    label ^= flip
    sensors = {}
    for ev in gt.planted():
        state = _propagate(tree, states, ev.id)
        model = gt.sensor_models[ev.id]
        fail = rng.uniform(*model.failure, size=n)
        normal = rng.uniform(*model.normal, size=n)
        sensors[ev.threshold.sensor_name] = np.where(state, fail, normal)
    for name in gt.decoy_names:
        sensors[name] = rng.uniform(*gt.decoy_range, size=n)
    return label, sensors


def generate(gt: GroundTruth, seed: int, rows: int | None = None) -> Dataset:
    """Sample a dataset; rows are assigned to units ``days_per_unit`` at a time."""
    total = gt.n_units * gt.days_per_unit if rows is None else int(rows)
    if total < 0:
        raise ConfigError("rows must be non-negative")
    labels, columns = [], {}
    for b, start in enumerate(range(0, total, BLOCK_ROWS)):
        label, sensors = _block(gt, seed, b, min(BLOCK_ROWS, total - start))
        labels.append(label)
        for k, v in sensors.items():
            columns.setdefault(k, []).append(v)

    keys = tuple(RecordKey(f"U{i // gt.days_per_unit:05d}",
                           START_DATE + _dt.timedelta(days=i % gt.days_per_unit))
                 for i in range(total))
    stats = {ev.threshold.sensor_name: ev.threshold.statistic for ev in gt.planted()}
    names = [ev.threshold.sensor_name for ev in gt.planted()] + gt.decoy_names
    sensors = [SensorColumn(name, stats.get(name, gt.statistic),
                            np.concatenate(columns[name]) if total else np.empty(0))
               for name in names]
    failure = np.concatenate(labels) if total else np.empty(0, dtype=bool)
    return Dataset(keys, sensors, [FailureColumn(gt.failure_name, failure)])


@dataclass
class RecoveryReport:
    recall: float
    precision: float
    theta_error: float | None
    theta_errors: dict[str, float] = field(default_factory=dict)
    side_match: dict[str, bool] = field(default_factory=dict)
    top_gate_match: bool = False
    learned_significance: float | None = None
    learned_depth: int | None = None
    true_depth: int | None = None
    planted: list[str] = field(default_factory=list)
    learned: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "recall": self.recall,
            "precision": self.precision,
            "theta_error": self.theta_error,
            "theta_errors": dict(sorted(self.theta_errors.items())),
            "side_match": dict(sorted(self.side_match.items())),
            "top_gate_match": self.top_gate_match,
            "learned_significance": self.learned_significance,
            "learned_depth": self.learned_depth,
            "true_depth": self.true_depth,
            "planted": self.planted,
            "learned": self.learned,
        }

    def to_text(self) -> str:
        def fmt(x):
            return "n/a" if x is None else f"{x:.4f}"
        lines = [
            f"variable recall     {self.recall:.4f}",
            f"variable precision  {self.precision:.4f}",
            f"mean |theta error|  {fmt(self.theta_error)}",
            f"top gate type match {'yes' if self.top_gate_match else 'no'}",
            f"learned significance {fmt(self.learned_significance)}",
            f"depth learned/true  {self.learned_depth}/{self.true_depth}",
        ]
        return "\n".join(lines) + "\n"


def _thresholds_by_sensor(tree: FaultTree):
    return {e.threshold.sensor_name: e.threshold for e in tree.events.values()
            if e.threshold is not None}


def recovery_report(learned: FaultTree, gt) -> RecoveryReport:
    """Compare the sensors, thresholds and top gate of a learned tree with the truth."""
    true_tree = gt.tree if isinstance(gt, GroundTruth) else gt
    planted = _thresholds_by_sensor(true_tree)
    found = _thresholds_by_sensor(learned)
    common = sorted(set(planted) & set(found))
    recall = len(common) / len(planted) if planted else 0.0
    precision = len(common) / len(found) if found else 0.0
    errors = {name: abs(found[name].theta - planted[name].theta) for name in common}
    sides = {name: found[name].failure_side is planted[name].failure_side for name in common}
    lt, tt = learned.top_gate, true_tree.top_gate
    return RecoveryReport(
        recall=recall,
        precision=precision,
        theta_error=float(np.mean(list(errors.values()))) if errors else None,
        theta_errors=errors,
        side_match=sides,
        top_gate_match=lt is not None and tt is not None and lt.type is tt.type,
        learned_significance=learned.significance,
        learned_depth=depth(learned) if learned.gates else None,
        true_depth=depth(true_tree) if true_tree.gates else None,
        planted=sorted(planted),
        learned=sorted(found),
    )
