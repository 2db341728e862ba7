"""Greedy fault-tree construction from thresholded sensor variables.

Starting from the failure as top event, the learner repeatedly takes the
oldest event that is not yet a gate output and looks for the AND/OR gate
over unused variables whose expression correlates best (phi) with it.
The first gate must beat ``min_top_significance``; every later gate must
score at least as high as the top gate.
"""

from __future__ import annotations

import dataclasses
import logging
import time
from collections import deque
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from math import comb
from typing import Sequence

import numpy as np

from .data import BoolColumn, Dataset, Statistic, as_bool_column
from .errors import ConfigError, DataError, DegenerateDataError, FTLearnError, NoStructureError
from .fault_tree import FaultTree, annotate_probabilities, validate
from .ingestion import balance
from .significance import ContingencyTable, GateCandidate, GateType, phi
from .threshold import Threshold, ThresholdedVariable, discretize, threshold_all

__all__ = [
    "TIE_BREAK",
    "LearnerConfig",
    "SearchState",
    "Attempt",
    "gate_evaluation_count",
    "search_gates",
    "best_gate_for",
    "learn",
    "learn_all",
]

log = logging.getLogger(__name__)

TIE_BREAK = "significance,and-first,smaller-arity,labels"

_TYPE_RANK = {GateType.AND: 0, GateType.OR: 1}


@dataclass(frozen=True)
class LearnerConfig:
    max_inputs: int = 3
    min_top_significance: float = 0.0
    statistic: Statistic = Statistic.MIN
    tie_break: str = TIE_BREAK
    random_seed: int = 0  # unused by the deterministic search
    workers: int = 1

    def __post_init__(self):
        if isinstance(self.max_inputs, bool) or not isinstance(self.max_inputs, int):
            raise ConfigError(f"max_inputs must be an integer, got {self.max_inputs!r}")
        if self.max_inputs < 2:
            raise ConfigError(f"max_inputs must be at least 2, got {self.max_inputs}")
        object.__setattr__(self, "min_top_significance", float(self.min_top_significance))
        try:
            object.__setattr__(self, "statistic", Statistic.parse(self.statistic))
        except DataError as exc:
            raise ConfigError(str(exc)) from None
        if self.tie_break != TIE_BREAK:
            raise ConfigError(f"unsupported tie_break policy {self.tie_break!r}")
        if self.workers < 1:
            raise ConfigError("workers must be at least 1")

    @classmethod
    def from_dict(cls, doc: dict | None, **overrides) -> "LearnerConfig":
        fields = {f.name for f in dataclasses.fields(cls)}
        doc = dict(doc or {})
        unknown = set(doc) - fields
        if unknown:
            raise ConfigError(f"unknown learner settings: {sorted(unknown)}")
        doc.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**doc)

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["statistic"] = self.statistic.value
        return d


@dataclass
class SearchState:
    tree: FaultTree
    used: set[str] = field(default_factory=set)
    frontier: deque = field(default_factory=deque)


def gate_evaluation_count(m: int, max_inputs: int) -> int:
    """Gate expressions scored for ``m`` free variables: both types, every subset size 2..max."""
    return 2 * sum(comb(m, k) for k in range(2, max_inputs + 1))


def _column(c) -> BoolColumn:
    if isinstance(c, ThresholdedVariable):
        return c.values
    return as_bool_column(c)


def _and_masks(a, b):
    if a is None:
        return b
    if b is None:
        return a
    return a & b


def _rank_key(sig: float, gate_type: GateType, labels: tuple[str, ...]):
    return (-sig, _TYPE_RANK[gate_type], len(labels), labels)


class _Scorer:
    """Scores gate expressions against one output column."""

    def __init__(self, output: BoolColumn, columns: list[BoolColumn], labels, max_inputs):
        self.o = output.values
        self.ov = output.valid
        self.cols = [c.values for c in columns]
        self.valids = [c.valid for c in columns]
        self.labels = labels
        self.max_inputs = max_inputs
        self.n = len(self.o)
        self.n_out = int(np.count_nonzero(self.o)) if self.ov is None else None

    def table(self, expr, valid) -> ContingencyTable | None:
        m = _and_masks(self.ov, valid)
        if m is None:
            n, n_out = self.n, self.n_out
            n_expr = int(np.count_nonzero(expr))
            n11 = int(np.count_nonzero(expr & self.o))
        else:
            n = int(np.count_nonzero(m))
            if n == 0:
                return None
            om = self.o & m
            n_out = int(np.count_nonzero(om))
            n_expr = int(np.count_nonzero(expr & m))
            n11 = int(np.count_nonzero(expr & om))
        return ContingencyTable.from_counts(n, n_out, n_expr, n11)

    def run(self, roots: Sequence[int]):
        best = None
        count = 0
        m = len(self.cols)

        def consider(expr, valid, gate_type, idxs):
            nonlocal best, count
            count += 1
            t = self.table(expr, valid)
            sig = phi(t) if t is not None else 0.0
            labels = tuple(self.labels[i] for i in idxs)
            key = _rank_key(sig, gate_type, labels)
            if best is None or key < best[0]:
                best = (key, gate_type, idxs, sig)

        def extend(start, and_arr, or_arr, valid, idxs):
            for j in range(start, m):
                a = and_arr & self.cols[j]
                o = or_arr | self.cols[j]
                v = _and_masks(valid, self.valids[j])
                nxt = idxs + (j,)
                consider(a, v, GateType.AND, nxt)
                consider(o, v, GateType.OR, nxt)
                if len(nxt) < self.max_inputs:
                    extend(j + 1, a, o, v, nxt)

        for i in roots:
            extend(i + 1, self.cols[i], self.cols[i], self.valids[i], (i,))
        return best, count


def search_gates(output, candidates: Sequence, config: LearnerConfig
                 ) -> tuple[GateCandidate | None, int]:
    """Exhaustive gate search; returns the winner and how many expressions were scored.

    ``candidates`` are ThresholdedVariables, or ``(label, column)`` pairs.
    Ranking: higher phi, then AND before OR, then fewer inputs, then the
    lexicographically smaller tuple of (sorted) input labels.
    """
    items = []
    for c in candidates:
        if isinstance(c, ThresholdedVariable):
            items.append((c.label, c.name, c.values))
        else:
            label, col = c
            items.append((label, label, _column(col)))
    items.sort(key=lambda it: it[0])
    if len(items) < 2:
        return None, 0
    out = _column(output)
    if any(len(col) != len(out) for _, _, col in items):
        raise DataError("candidate columns are not aligned with the output")

    scorer = _Scorer(out, [col for _, _, col in items], [lab for lab, _, _ in items],
                     config.max_inputs)
    roots = list(range(len(items) - 1))
    if config.workers > 1 and len(roots) > 1:
        # deal roots round-robin; reduction below is order independent
        shards = [roots[k::config.workers] for k in range(config.workers)]
        with ThreadPoolExecutor(max_workers=config.workers) as pool:
            parts = list(pool.map(scorer.run, [s for s in shards if s]))
    else:
        parts = [scorer.run(roots)]

    count = sum(c for _, c in parts)
    winners = [b for b, _ in parts if b is not None]
    if not winners:
        return None, count
    _, gate_type, idxs, sig = min(winners, key=lambda b: b[0])
    return GateCandidate(gate_type, tuple(items[i][1] for i in idxs), sig), count


def best_gate_for(output, candidates: Sequence, config: LearnerConfig | None = None
                  ) -> GateCandidate | None:
    """Most significant gate over ``candidates`` for ``output``, or None if fewer than 2."""
    return search_gates(output, candidates, config or LearnerConfig())[0]


def learn(data, failure_name: str, config: LearnerConfig | None = None,
          thresholds: Sequence[Threshold] | None = None) -> FaultTree:
    """Learn a fault tree for ``failure_name`` from a balanced dataset.

    Raises NoStructureError when no top gate clears ``min_top_significance``.
    """
    config = config or LearnerConfig()
    base: Dataset = getattr(data, "base", data)
    failure = base.failure(failure_name)
    n_fail = int(np.count_nonzero(failure.values))
    if n_fail == 0 or n_fail == len(failure):
        raise DegenerateDataError(f"degenerate labels for {failure_name!r}")

    if thresholds is None:
        thresholds, skipped = threshold_all(base, failure_name, config.statistic,
                                            workers=config.workers)
        for name, why in skipped:
            log.debug("skipping %s for %s: %s", name, failure_name, why)
    if len(thresholds) < 2:
        raise NoStructureError(f"no significant structure for {failure_name!r}: "
                               f"fewer than 2 thresholdable sensors")

    variables = {}
    for t in thresholds:
        var = discretize(base.sensor(t.sensor_name, t.statistic), t)
        variables[var.name] = var

    state = SearchState(FaultTree.empty(failure_name, config.statistic))
    state.frontier.append(failure_name)
    tle = failure_name
    while state.frontier:
        event_id = state.frontier.popleft()
        unused = [v for name, v in variables.items() if name not in state.used]
        if len(unused) < 2:
            break
        output = failure if event_id == tle else variables[event_id]
        best = best_gate_for(output, unused, config)
        if best is None:
            continue
        top = state.tree.top_gate
        if event_id == tle:
            accept = best.significance > config.min_top_significance
        else:
            accept = best.significance >= top.significance
        if not accept:
            if event_id == tle:
                raise NoStructureError(
                    f"no significant structure for {failure_name!r}: best top gate scores "
                    f"{best.significance:.4f} (needs > {config.min_top_significance})")
            continue
        state.tree.attach(event_id, best.gate_type,
                          [variables[name].source for name in best.inputs], best.significance)
        state.used.update(best.inputs)
        state.frontier.extend(best.inputs)
        validate(state.tree, config.max_inputs)

    if not state.tree.gates:
        raise NoStructureError(f"no significant structure for {failure_name!r}")
    annotate_probabilities(state.tree, base)
    validate(state.tree, config.max_inputs, require_probabilities=True)
    return state.tree


@dataclass
class Attempt:
    failure: str
    statistic: Statistic
    tree: FaultTree | None = None
    reason: str | None = None
    runtime_ms: float = 0.0

    @property
    def status(self) -> str:
        return "ok" if self.tree is not None else "skipped"


def learn_all(data: Dataset, config: LearnerConfig | None = None,
              statistics: Sequence[Statistic] = tuple(Statistic),
              workers: int = 1) -> list[Attempt]:
    """One learning attempt per (failure, statistic); failures become skip reasons.

    Results are sorted by failure name, then statistic in declaration order.
    """
    config = config or LearnerConfig()
    jobs = [(name, Statistic.parse(s)) for name in sorted(data.failures) for s in statistics]
    balanced = {}
    for name in sorted(data.failures):
        try:
            balanced[name] = balance(data, name)
        except FTLearnError as exc:
            balanced[name] = exc

    def run(job):
        name, stat = job
        t0 = time.perf_counter()
        b = balanced[name]
        if isinstance(b, Exception):
            return Attempt(name, stat, None, str(b), 0.0)
        try:
            if not b.base.sensors_for(stat):
                raise NoStructureError(f"no sensor columns for statistic {stat.value!r}")
            tree = learn(b, name, dataclasses.replace(config, statistic=stat, workers=1))
            reason = None
        except FTLearnError as exc:
            tree, reason = None, str(exc)
        return Attempt(name, stat, tree, reason, (time.perf_counter() - t0) * 1000.0)

    if workers > 1 and len(jobs) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(run, jobs))
    return [run(j) for j in jobs]
