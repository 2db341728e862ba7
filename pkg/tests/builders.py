"""Shared fixtures-as-functions for building datasets and ground truths."""

import datetime as dt

import numpy as np

from ftlearn.data import Dataset, FailureColumn, RecordKey, SensorColumn
from ftlearn.fault_tree import Event, FaultTree
from ftlearn.synthetic import GroundTruth, SensorModel
from ftlearn.threshold import Threshold

D0 = dt.date(2021, 1, 1)


def day(k):
    return D0 + dt.timedelta(days=k)


def make_dataset(sensors=None, failures=None, keys=None, statistic="min"):
    """Dataset from plain dicts; ``sensors`` maps name -> values."""
    sensors = sensors or {}
    failures = failures or {}
    n = len(next(iter({**sensors, **failures}.values()))) if (sensors or failures) else 0
    if keys is None:
        keys = [RecordKey(f"U{i}", D0) for i in range(n)]
    return Dataset(
        tuple(keys),
        [SensorColumn(k, statistic, np.asarray(v, dtype=float)) for k, v in sensors.items()],
        [FailureColumn(k, np.asarray(v, dtype=bool)) for k, v in failures.items()],
    )


def planted_gt(gate="OR", pa=0.3, pb=0.3, noise=0.0, decoys=10, n_units=100, days=100):
    ta = Threshold("A", "min", 10.0, 0.0, "LEQ")
    tb = Threshold("B", "min", 50.0, 0.0, "GT")
    tree = FaultTree.empty("F", "min")
    tree.attach("F", gate, [Event.basic(ta, pa), Event.basic(tb, pb)], 1.0)
    models = {ta.variable: SensorModel((0.0, 10.0), (20.0, 30.0)),
              tb.variable: SensorModel((60.0, 70.0), (40.0, 50.0))}
    return GroundTruth(tree, models, label_noise=noise, n_units=n_units,
                       days_per_unit=days, decoys=decoys)


def two_gate_gt(noise=0.01, decoys=10, n_units=100, days=100):
    """F = OR(A, B) with B = AND(C, D)."""
    ta = Threshold("A", "min", 10.0, 0.0, "LEQ")
    tb = Threshold("B", "min", 50.0, 0.0, "GT")
    tc = Threshold("C", "min", 5.0, 0.0, "LEQ")
    td = Threshold("D", "min", 80.0, 0.0, "GT")
    tree = FaultTree.empty("F", "min")
    tree.attach("F", "OR", [Event.basic(ta, 0.2), Event.basic(tb)], 1.0)
    tree.attach(tb.variable, "AND", [Event.basic(tc, 0.5), Event.basic(td, 0.5)], 1.0)
    models = {ta.variable: SensorModel((0.0, 10.0), (20.0, 30.0)),
              tb.variable: SensorModel((60.0, 70.0), (40.0, 50.0)),
              tc.variable: SensorModel((0.0, 5.0), (6.0, 12.0)),
              td.variable: SensorModel((81.0, 90.0), (70.0, 80.0))}
    return GroundTruth(tree, models, label_noise=noise, n_units=n_units,
                       days_per_unit=days, decoys=decoys)


def independent_dataset(seed, n_units=50, days=40, n_sensors=6, p_fail=0.3):
    rng = np.random.default_rng(seed)
    n = n_units * days
    keys = [RecordKey(f"U{i // days:03d}", day(i % days)) for i in range(n)]
    sensors = {f"s{k}": rng.normal(size=n) for k in range(n_sensors)}
    return make_dataset(sensors, {"F": rng.random(n) < p_fail}, keys)


def random_tree(rng, n_vars=None, max_inputs=3):
    """A random valid learned-style tree over sensors x0..x{n-1}."""
    from ftlearn.significance import GateType

    n_vars = n_vars or int(rng.integers(2, 12))
    thresholds = [Threshold(f"x{i}", "min", float(rng.integers(-50, 50)), float(rng.random()),
                            "LEQ" if rng.random() < 0.5 else "GT") for i in range(n_vars)]
    tree = FaultTree.empty("TOP", "min")
    top_sig = float(rng.uniform(0.05, 0.9))
    frontier, pool = ["TOP"], list(thresholds)
    while frontier and len(pool) >= 2:
        out = frontier.pop(0)
        if out != "TOP" and rng.random() < 0.4:
            continue
        k = int(rng.integers(2, min(max_inputs, len(pool)) + 1))
        ins, pool = pool[:k], pool[k:]
        sig = top_sig if out == "TOP" else float(rng.uniform(top_sig, 1.0))
        gtype = GateType.AND if rng.random() < 0.5 else GateType.OR
        tree.attach(out, gtype, [Event.basic(t, float(rng.random())) for t in ins], sig)
        frontier.extend(t.variable for t in ins)
    return tree


def enumerate_best_gate(output, named_columns, max_inputs=3):
    """Score every type x subset independently and rank per the documented tie-break.

    Returns ``(best, n_scored)`` with best = (significance, type, labels).
    """
    import itertools

    from ftlearn.significance import contingency, eval_gate, phi

    scored = []
    labels = sorted(named_columns)
    for k in range(2, max_inputs + 1):
        for subset in itertools.combinations(labels, k):
            for gtype in ("AND", "OR"):
                expr = eval_gate(gtype, [named_columns[x] for x in subset])
                scored.append((phi(contingency(output, expr)), gtype, subset))
    if not scored:
        return None, 0
    ranked = sorted(scored, key=lambda s: (-s[0], s[1] != "AND", len(s[2]), s[2]))
    return ranked[0], len(scored)
