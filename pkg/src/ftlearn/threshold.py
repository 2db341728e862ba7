"""Information-gain thresholds that turn sensor statistics into Boolean events."""

from __future__ import annotations

import enum
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .data import BoolColumn, Dataset, FailureColumn, SensorColumn, Statistic
from .errors import DataError, DegenerateDataError

__all__ = [
    "Side",
    "Threshold",
    "ThresholdedVariable",
    "GAIN_TIE_TOL",
    "entropy",
    "gain",
    "find_optimal_threshold",
    "discretize",
    "threshold_all",
    "thresholds_to_json",
    "thresholds_from_json",
]

# Gains closer than this count as tied; the smaller threshold wins.
GAIN_TIE_TOL = 1e-12


class Side(str, enum.Enum):
    LEQ = "LEQ"
    GT = "GT"

    @property
    def symbol(self) -> str:
        return "≤" if self is Side.LEQ else ">"


@dataclass(frozen=True)
class Threshold:
    sensor_name: str
    statistic: Statistic
    theta: float
    gain: float
    failure_side: Side

    def __post_init__(self):
        object.__setattr__(self, "statistic", Statistic.parse(self.statistic))
        object.__setattr__(self, "failure_side", Side(self.failure_side))
        object.__setattr__(self, "theta", float(self.theta))
        object.__setattr__(self, "gain", float(self.gain))

    @property
    def variable(self) -> str:
        """Identifier of the thresholded variable, e.g. ``min(s2_temp)``."""
        return f"{self.statistic.value}({self.sensor_name})"

    @property
    def label(self) -> str:
        return f"{self.variable} {self.failure_side.symbol} {self.theta!r}"

    def to_dict(self) -> dict:
        return {"sensor": self.sensor_name, "statistic": self.statistic.value,
                "theta": self.theta, "gain": self.gain,
                "failure_side": self.failure_side.value}

    @classmethod
    def from_dict(cls, doc: dict) -> "Threshold":
        return cls(doc["sensor"], doc["statistic"], doc["theta"], doc["gain"],
                   doc["failure_side"])


@dataclass(frozen=True)
class ThresholdedVariable:
    source: Threshold
    values: BoolColumn

    @property
    def name(self) -> str:
        return self.source.variable

    @property
    def label(self) -> str:
        return self.source.label


def _labels(f) -> np.ndarray:
    if isinstance(f, FailureColumn):
        return f.values
    return np.asarray(f).astype(bool)


def _entropy_counts(n, ones):
    """Base-2 entropy from counts, vectorised; empty groups give 0."""
    n = np.asarray(n, dtype=np.float64)
    ones = np.asarray(ones, dtype=np.float64)
    with np.errstate(divide="ignore", invalid="ignore"):
        p1 = np.where(n > 0, ones / n, 0.0)
        p0 = 1.0 - p1
        t1 = np.where(p1 > 0, p1 * np.log2(np.where(p1 > 0, p1, 1.0)), 0.0)
        t0 = np.where(p0 > 0, p0 * np.log2(np.where(p0 > 0, p0, 1.0)), 0.0)
    return -(t0 + t1)


def entropy(f) -> float:
    """Entropy in bits of a Boolean label column."""
    y = _labels(f)
    if len(y) == 0:
        raise DegenerateDataError("empty column")
    return float(max(0.0, _entropy_counts(len(y), np.count_nonzero(y))))


def _split_gains(n, ones, n_left, ones_left):
    n_right = n - n_left
    ones_right = ones - ones_left
    g = (_entropy_counts(n, ones)
         - (n_left / n) * _entropy_counts(n_left, ones_left)
         - (n_right / n) * _entropy_counts(n_right, ones_right))
    return np.maximum(g, 0.0)


def gain(s, f, theta: float) -> float:
    """Entropy removed by splitting at ``s <= theta`` versus ``s > theta``."""
    x = s.values if isinstance(s, SensorColumn) else np.asarray(s, dtype=np.float64)
    y = _labels(f)
    if len(x) != len(y):
        raise DataError("sensor and failure columns are not aligned")
    if len(x) == 0:
        raise DegenerateDataError("empty column")
    left = x <= theta
    return float(_split_gains(len(y), np.count_nonzero(y),
                              np.count_nonzero(left), np.count_nonzero(y & left)))


def _scan(x: np.ndarray, y: np.ndarray):
    """Distinct values of ``x`` with left-split sizes and failure counts."""
    order = np.argsort(x, kind="stable")
    xs = x[order]
    cum_ones = np.cumsum(y[order])
    # last position of each run of equal values
    last = np.flatnonzero(np.append(xs[1:] != xs[:-1], True))
    return xs[last], last + 1, cum_ones[last]


def find_optimal_threshold(s: SensorColumn, f) -> Threshold:
    """Best split over every distinct sensor value; rows with missing sensor are ignored."""
    x = s.values
    y = _labels(f)
    if len(x) != len(y):
        raise DataError("sensor and failure columns are not aligned")
    keep = ~np.isnan(x)
    if not keep.all():
        x, y = x[keep], y[keep]
    n = len(y)
    ones = int(np.count_nonzero(y))
    if n == 0:
        raise DataError(f"no usable rows for {s.name!r}")
    if ones == 0 or ones == n:
        raise DegenerateDataError("degenerate labels")
    values, n_left, ones_left = _scan(x, y)
    if len(values) < 2:
        raise DegenerateDataError("constant sensor")

    gains = _split_gains(n, ones, n_left, ones_left)
    best = int(np.flatnonzero(gains >= gains.max() - GAIN_TIE_TOL)[0])
    nl, ol = int(n_left[best]), int(ones_left[best])
    nr, orr = n - nl, ones - ol
    # failure share strictly higher on the right, compared without division
    side = Side.GT if orr * nl > ol * nr else Side.LEQ
    return Threshold(s.name, s.statistic, float(values[best]), float(gains[best]), side)


def discretize(s: SensorColumn, t: Threshold) -> ThresholdedVariable:
    if (s.name, s.statistic) != (t.sensor_name, t.statistic):
        raise DataError(f"threshold for {t.variable} applied to "
                        f"{s.statistic.value}({s.name})")
    x = s.values
    valid = ~np.isnan(x)
    with np.errstate(invalid="ignore"):
        if t.failure_side is Side.LEQ:
            values = x <= t.theta
        else:
            values = x > t.theta
    values &= valid
    values.setflags(write=False)
    return ThresholdedVariable(t, BoolColumn(values, None if valid.all() else valid))


def threshold_all(d, failure_name: str, statistic, workers: int = 1
                  ) -> tuple[list[Threshold], list[tuple[str, str]]]:
    """Learn a threshold for every sensor of ``statistic`` against ``failure_name``.

    Accepts a Dataset or BalancedDataset. Returns ``(thresholds, skipped)``
    where ``skipped`` lists ``(sensor_name, reason)`` for unusable columns.
    Output order follows sensor name regardless of ``workers``.
    """
    base: Dataset = getattr(d, "base", d)
    f = base.failure(failure_name)
    columns = base.sensors_for(statistic)

    def one(col):
        try:
            return find_optimal_threshold(col, f)
        except DataError as exc:
            return str(exc)

    if workers > 1 and len(columns) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(one, columns))
    else:
        results = [one(c) for c in columns]

    thresholds, skipped = [], []
    for col, res in zip(columns, results):
        if isinstance(res, Threshold):
            thresholds.append(res)
        else:
            skipped.append((col.name, res))
    return thresholds, skipped


def thresholds_to_json(failure_name: str, statistic, thresholds, skipped=(),
                       reason: str | None = None) -> str:
    doc = {
        "format_version": 1,
        "failure": failure_name,
        "statistic": Statistic.parse(statistic).value,
        "thresholds": [t.to_dict() for t in thresholds],
        "skipped": [{"sensor": name, "reason": why} for name, why in skipped],
    }
    if reason is not None:
        doc["reason"] = reason
    return json.dumps(doc, indent=2, ensure_ascii=False) + "\n"


def thresholds_from_json(text: str) -> list[Threshold]:
    return [Threshold.from_dict(t) for t in json.loads(text)["thresholds"]]
