import itertools

import numpy as np
import pytest
from hypothesis import given, strategies as st

from ftlearn.errors import ConfigError, DataError
from ftlearn.significance import (ContingencyTable, GateCandidate, GateType, contingency,
                                  eval_gate, gate_significance, phi)


def test_contingency_examples():
    assert contingency([1, 0], [1, 0]) == ContingencyTable(n11=1, n10=0, n01=0, n00=1)
    assert contingency([1, 1, 0, 0], [1, 0, 1, 0]) == ContingencyTable(1, 1, 1, 1)


def test_contingency_matches_naive_loop():
    rng = np.random.default_rng(7)
    a, b = rng.random(100) < 0.4, rng.random(100) < 0.6
    counts = {(i, j): 0 for i in (0, 1) for j in (0, 1)}
    for x, y in zip(a, b):
        counts[int(x), int(y)] += 1
    t = contingency(a, b)
    assert (t.n11, t.n10, t.n01, t.n00) == (counts[1, 1], counts[1, 0], counts[0, 1], counts[0, 0])


def test_contingency_skips_missing():
    t = contingency([1, None, 0, 1], [1, 1, None, 0])
    assert t == ContingencyTable(1, 1, 0, 0)
    with pytest.raises(DataError):
        contingency([None], [1])


def test_phi_examples():
    assert phi(ContingencyTable(5, 0, 0, 5)) == 1.0
    assert phi(ContingencyTable(0, 5, 5, 0)) == -1.0
    assert phi(ContingencyTable(30, 10, 10, 30)) == pytest.approx(0.5, abs=1e-15)


def test_phi_matches_pearson_on_columns():
    # 30 (1,1), 10 (1,0), 10 (0,1), 30 (0,0)
    a = np.array([1] * 40 + [0] * 40, dtype=float)
    b = np.array([1] * 30 + [0] * 10 + [1] * 10 + [0] * 30, dtype=float)
    r = np.corrcoef(a, b)[0, 1]
    assert r == pytest.approx(0.5, abs=1e-12)
    assert phi(contingency(a, b)) == pytest.approx(r, abs=1e-12)


def test_phi_zero_marginal():
    assert phi(ContingencyTable(4, 3, 0, 0)) == 0.0
    with pytest.raises(DataError):
        phi(ContingencyTable(0, 0, 0, 0))


tables = st.tuples(*[st.integers(0, 10_000)] * 4).map(lambda c: ContingencyTable(*c)).filter(
    lambda t: t.total > 0)


@given(tables)
def test_phi_range_and_symmetry(t):
    v = phi(t)
    assert -1.0 <= v <= 1.0
    assert phi(ContingencyTable(t.n11, t.n01, t.n10, t.n00)) == v


@given(tables, st.sampled_from([2, 5, 10]))
def test_phi_duplication_invariant(t, k):
    assert phi(t.scaled(k)) == phi(t)


two_class = st.lists(st.booleans(), min_size=2, max_size=200).filter(
    lambda a: 0 < sum(a) < len(a))


@given(two_class)
def test_phi_self_and_negation(a):
    a = np.array(a)
    assert phi(contingency(a, a)) == 1.0
    assert phi(contingency(a, ~a)) == -1.0


@given(two_class, two_class)
def test_phi_symmetric_in_columns(a, b):
    n = min(len(a), len(b))
    a, b = a[:n], b[:n]
    assert phi(contingency(a, b)) == phi(contingency(b, a))


# --- gates -----------------------------------------------------------------------

def test_eval_gate_examples():
    assert eval_gate("AND", [[1, 1, 0], [1, 0, 0]]).to_list() == [True, False, False]
    assert eval_gate("OR", [[1, 0, 0], [0, 0, 1]]).to_list() == [True, False, True]


@pytest.mark.parametrize("arity", [2, 3])
@pytest.mark.parametrize("gate_type", list(GateType))
def test_eval_gate_truth_table(gate_type, arity):
    rows = list(itertools.product([0, 1], repeat=arity))
    cols = [[r[i] for r in rows] for i in range(arity)]
    out = eval_gate(gate_type, cols).to_list()
    for r, got in zip(rows, out):
        expected = all(r) if gate_type is GateType.AND else any(r)
        assert got == expected


def test_eval_gate_missing_propagates():
    out = eval_gate("OR", [[1, None, 0], [0, 1, 0]])
    assert out.to_list() == [True, None, False]


def test_eval_gate_arity_floor():
    with pytest.raises(ConfigError):
        eval_gate("AND", [[1, 0]])
    with pytest.raises(ConfigError):
        GateCandidate("AND", ["a"])
    with pytest.raises(ConfigError):
        GateCandidate("OR", ["a", "a"])


def test_gate_significance_exact_match():
    a, b = [1, 1, 0, 0, 1], [0, 1, 0, 1, 1]
    g = GateCandidate("OR", ["a", "b"])
    out = eval_gate(g, [a, b])
    assert gate_significance(g, [a, b], out) == 1.0
    assert g.significance == 1.0


def test_gate_significance_independent_output():
    rng = np.random.default_rng(11)
    n = 10_000
    a, b = rng.random(n) < 0.5, rng.random(n) < 0.5
    out = rng.random(n) < 0.5
    g = GateCandidate("AND", ["a", "b"])
    assert abs(gate_significance(g, [a, b], out)) < 0.1
