from math import comb

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from builders import day, enumerate_best_gate, independent_dataset, make_dataset, planted_gt
from ftlearn.data import BoolColumn, Dataset, FailureColumn, RecordKey, SensorColumn, Statistic
from ftlearn.errors import ConfigError, DegenerateDataError, NoStructureError
from ftlearn.fault_tree import to_json, validate
from ftlearn.ingestion import balance
from ftlearn.learner import (LearnerConfig, best_gate_for, gate_evaluation_count, learn,
                             learn_all, search_gates)
from ftlearn.significance import GateType
from ftlearn.synthetic import generate


def random_columns(rng, m, n, density=None):
    cols = {}
    for i in range(m):
        p = density if density is not None else rng.uniform(0.2, 0.8)
        cols[f"v{i}"] = rng.random(n) < p
    return cols


def as_candidates(cols):
    return [(name, BoolColumn(v)) for name, v in cols.items()]


# --- best_gate_for ---------------------------------------------------------------

def test_best_gate_exact_pair():
    rng = np.random.default_rng(0)
    cols = random_columns(rng, 4, 200)
    out = cols["v1"] | cols["v3"]
    g = best_gate_for(out, as_candidates(cols))
    assert (g.gate_type, g.inputs, g.significance) == (GateType.OR, ("v1", "v3"), 1.0)


def test_best_gate_four_candidates_counts_and_oracle():
    rng = np.random.default_rng(1)
    cols = random_columns(rng, 4, 300)
    out = rng.random(300) < 0.5
    best, count = search_gates(out, as_candidates(cols), LearnerConfig(max_inputs=3))
    assert count == 2 * (comb(4, 2) + comb(4, 3)) == 20
    ref, ref_count = enumerate_best_gate(out, cols, 3)
    assert ref_count == 20
    assert (best.significance, best.gate_type.value, best.inputs) == ref


def test_best_gate_needs_two_candidates():
    assert best_gate_for([1, 0], [("a", [1, 0])]) is None
    assert best_gate_for([1, 0], []) is None


def test_tie_break_prefers_and_then_smaller_arity():
    # identical columns make AND(a, b) == OR(a, b) == AND(a, b, c) == a
    a = np.array([1, 0, 1, 0, 1, 1, 0, 0], dtype=bool)
    cols = {"a": a, "b": a.copy(), "c": a.copy()}
    g = best_gate_for(a, as_candidates(cols))
    assert (g.gate_type, g.inputs, g.significance) == (GateType.AND, ("a", "b"), 1.0)


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(2, 6), st.integers(2, 3),
       st.sampled_from([None, 0.5]), st.integers(4, 40))
def test_search_matches_enumeration(seed, m, max_inputs, density, n):
    rng = np.random.default_rng(seed)
    cols = random_columns(rng, m, n, density)
    out = rng.random(n) < 0.5
    best, count = search_gates(out, as_candidates(cols), LearnerConfig(max_inputs=max_inputs))
    ref, ref_count = enumerate_best_gate(out, cols, max_inputs)
    assert count == ref_count == gate_evaluation_count(m, max_inputs)
    assert (best.significance, best.gate_type.value, best.inputs) == ref


@pytest.mark.parametrize("m, k", [(2, 3), (5, 2), (7, 3), (6, 4)])
def test_candidate_count_bound(m, k):
    rng = np.random.default_rng(m * 10 + k)
    cols = random_columns(rng, m, 50)
    _, count = search_gates(rng.random(50) < 0.5, as_candidates(cols), LearnerConfig(max_inputs=k))
    assert count == 2 * sum(comb(m, j) for j in range(2, k + 1))


def test_search_with_missing_values():
    out = BoolColumn(np.array([1, 0, 1, 0, 1], dtype=bool))
    a = BoolColumn(np.array([1, 0, 1, 1, 0], dtype=bool),
                   np.array([1, 1, 1, 0, 0], dtype=bool))
    b = BoolColumn(np.array([0, 0, 1, 0, 1], dtype=bool))
    g = best_gate_for(out, [("a", a), ("b", b)])
    # on the three rows where a is present, OR(a, b) reproduces the output
    assert (g.gate_type, g.significance) == (GateType.OR, 1.0)


def test_parallel_search_is_order_independent():
    rng = np.random.default_rng(5)
    cols = random_columns(rng, 9, 500)
    out = rng.random(500) < 0.5
    one = search_gates(out, as_candidates(cols), LearnerConfig(workers=1))
    many = search_gates(out, as_candidates(cols), LearnerConfig(workers=4))
    assert one == many


# --- config ------------------------------------------------------------------------

def test_config_validation():
    with pytest.raises(ConfigError):
        LearnerConfig(max_inputs=1)
    with pytest.raises(ConfigError):
        LearnerConfig(tie_break="random")
    with pytest.raises(ConfigError):
        LearnerConfig.from_dict({"max_inputz": 3})
    c = LearnerConfig.from_dict({"max_inputs": 2, "statistic": "max"}, max_inputs=4)
    assert (c.max_inputs, c.statistic) == (4, Statistic.MAX)


# --- learn -------------------------------------------------------------------------

@pytest.fixture(scope="module")
def or_data():
    gt = planted_gt("OR", decoys=10, n_units=50, days=60)
    return gt, balance(generate(gt, 4), "F")


def test_learn_planted_or(or_data):
    gt, b = or_data
    tree = learn(b, "F")
    assert tree.significance == 1.0
    assert tree.top_gate.type is GateType.OR
    assert set(tree.top_gate.inputs) == {"min(A)", "min(B)"}
    validate(tree, require_probabilities=True)


def test_learn_independent_labels_has_no_structure():
    b = balance(independent_dataset(0), "F")
    with pytest.raises(NoStructureError, match="no significant structure"):
        learn(b, "F", LearnerConfig(min_top_significance=0.3))


def test_learn_deterministic(or_data):
    _, b = or_data
    assert to_json(learn(b, "F")) == to_json(learn(b, "F"))
    assert to_json(learn(b, "F", LearnerConfig(workers=3))) == to_json(learn(b, "F"))


def test_learn_monotone_control():
    for seed in range(5):
        gt = planted_gt("AND", pa=0.6, pb=0.6, noise=0.05, decoys=6, n_units=20, days=30)
        tree = learn(balance(generate(gt, seed), "F"), "F")
        assert min(g.significance for g in tree.gates) == tree.top_gate.significance


def test_learn_needs_two_sensors():
    keys = [RecordKey("U", day(i)) for i in range(4)]
    d = make_dataset({"s": [1.0, 2.0, 3.0, 4.0]}, {"F": [0, 1, 0, 1]}, keys)
    with pytest.raises(NoStructureError):
        learn(balance(d, "F"), "F")


def test_learn_degenerate_labels():
    d = make_dataset({"s": [1.0, 2.0], "t": [2.0, 1.0]}, {"F": [1, 1]})
    with pytest.raises(DegenerateDataError):
        learn(d, "F")


def test_learn_respects_max_inputs():
    gt = planted_gt("OR", decoys=8, n_units=20, days=40, noise=0.2)
    b = balance(generate(gt, 2), "F")
    tree = learn(b, "F", LearnerConfig(max_inputs=2))
    assert all(len(g.inputs) == 2 for g in tree.gates)
    validate(tree, max_inputs=2)


def test_learn_uses_each_variable_once():
    gt = planted_gt("OR", decoys=8, n_units=20, days=40, noise=0.1)
    tree = learn(balance(generate(gt, 9), "F"), "F")
    inputs = [i for g in tree.gates for i in g.inputs]
    assert len(inputs) == len(set(inputs))


# --- learn_all ---------------------------------------------------------------------

def _two_failure_dataset(seed=0, degenerate_stat=None):
    rng = np.random.default_rng(seed)
    n_units, days = 20, 30
    n = n_units * days
    keys = [RecordKey(f"U{i // days:02d}", day(i % days)) for i in range(n)]
    a, b = rng.random(n) < 0.3, rng.random(n) < 0.3
    sensors = []
    for stat in Statistic:
        for name, state in (("a", a), ("b", b), ("c", rng.random(n) < 0.5)):
            values = np.where(state, rng.uniform(0, 1, n), rng.uniform(2, 3, n))
            if stat.value == degenerate_stat:
                values = np.full(n, 1.0)
            sensors.append(SensorColumn(name, stat, values))
    failures = [FailureColumn("F1", a | b), FailureColumn("F2", a & ~b)]
    return Dataset(tuple(keys), sensors, failures)


def test_learn_all_attempt_count():
    attempts = learn_all(_two_failure_dataset())
    assert len(attempts) == 8
    assert [(a.failure, a.statistic.value) for a in attempts] == [
        (f, s.value) for f in ("F1", "F2") for s in Statistic]
    assert all(a.tree is not None for a in attempts)


def test_learn_all_records_skip():
    attempts = learn_all(_two_failure_dataset(degenerate_stat="range"))
    trees = [a for a in attempts if a.tree is not None]
    skips = [a for a in attempts if a.tree is None]
    assert len(trees) == 6 and len(skips) == 2
    assert all(a.statistic is Statistic.RANGE for a in skips)


def test_learn_all_degenerate_failure_column():
    d = _two_failure_dataset()
    d = Dataset(d.keys, d.sensors, [d.failure("F1"), FailureColumn("F0", np.zeros(len(d)))])
    attempts = learn_all(d)
    assert len(attempts) == 8
    assert sum(a.tree is None for a in attempts) == 4
    assert all("no positive examples" in a.reason for a in attempts if a.failure == "F0")


def test_learn_all_single_degenerate_pair():
    d = _two_failure_dataset()
    rows = list(balance(d, "F2").source_rows)
    sensors = dict(d.sensors)
    # avg readings vanish exactly on the rows F2 learns from
    for name in ("a", "b", "c"):
        values = d.sensor(name, "avg").values.copy()
        values[rows] = np.nan
        sensors[(name, Statistic.AVG)] = SensorColumn(name, Statistic.AVG, values)
    d = Dataset(d.keys, sensors, d.failures)
    attempts = learn_all(d)
    skips = [(a.failure, a.statistic) for a in attempts if a.tree is None]
    assert len(attempts) == 8
    assert skips == [("F2", Statistic.AVG)]


def test_learn_all_workers_same_result():
    d = _two_failure_dataset(3)
    one = [(a.failure, a.statistic, to_json(a.tree) if a.tree else a.reason) for a in learn_all(d)]
    many = [(a.failure, a.statistic, to_json(a.tree) if a.tree else a.reason)
            for a in learn_all(d, workers=4)]
    assert one == many
