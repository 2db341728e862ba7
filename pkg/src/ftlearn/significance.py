"""Phi-coefficient scoring of candidate gates."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from .data import BoolColumn, as_bool_column
from .errors import ConfigError, DataError

__all__ = [
    "GateType",
    "ContingencyTable",
    "GateCandidate",
    "contingency",
    "phi",
    "eval_gate",
    "gate_significance",
]


class GateType(str, enum.Enum):
    AND = "AND"
    OR = "OR"


class ContingencyTable(NamedTuple):
    """Joint counts; first index is the output event, second the gate expression."""

    n11: int
    n10: int
    n01: int
    n00: int

    @property
    def total(self) -> int:
        return self.n11 + self.n10 + self.n01 + self.n00

    def scaled(self, k: int) -> "ContingencyTable":
        return ContingencyTable(*(k * c for c in self))

    @classmethod
    def from_counts(cls, n: int, n_out: int, n_expr: int, n11: int) -> "ContingencyTable":
        """Build from the total, the two marginals of 1s and the joint 1-1 count."""
        n10 = n_out - n11
        n01 = n_expr - n11
        return cls(n11, n10, n01, n - n11 - n10 - n01)


@dataclass
class GateCandidate:
    gate_type: GateType
    inputs: tuple[str, ...]
    significance: float | None = field(default=None, compare=False)

    def __post_init__(self):
        self.gate_type = GateType(self.gate_type)
        self.inputs = tuple(self.inputs)
        if len(set(self.inputs)) != len(self.inputs):
            raise ConfigError(f"gate inputs must be distinct: {self.inputs}")
        if len(self.inputs) < 2:
            raise ConfigError(f"a gate needs at least 2 inputs, got {len(self.inputs)}")


def contingency(a, b) -> ContingencyTable:
    """2x2 counts over rows where both columns are present."""
    a = as_bool_column(a)
    b = as_bool_column(b)
    if len(a) != len(b):
        raise DataError("columns are not aligned")
    av, bv = a.values, b.values
    valid = _joint_valid([a.valid, b.valid])
    if valid is not None:
        av, bv = av[valid], bv[valid]
    n = len(av)
    if n == 0:
        raise DataError("no jointly non-missing rows")
    return ContingencyTable.from_counts(n, int(np.count_nonzero(av)), int(np.count_nonzero(bv)),
                                        int(np.count_nonzero(av & bv)))


def phi(t: ContingencyTable) -> float:
    """Phi coefficient; 0 when any marginal is empty.

    Evaluated as sign(num) * sqrt(num**2 / prod) with the quotient formed
    in exact integer arithmetic, so scaling every cell by k leaves the
    result bit-identical and perfect (dis)agreement gives exactly +-1.
    """
    n11, n10, n01, n00 = (int(c) for c in t)
    if n11 + n10 + n01 + n00 <= 0:
        raise DataError("empty contingency table")
    prod = (n11 + n10) * (n01 + n00) * (n11 + n01) * (n10 + n00)
    if prod == 0:
        return 0.0
    num = n11 * n00 - n10 * n01
    return math.copysign(math.sqrt(num * num / prod), num)


def _joint_valid(valids):
    masks = [v for v in valids if v is not None]
    if not masks:
        return None
    out = masks[0].copy()
    for m in masks[1:]:
        out &= m
    return out


def eval_gate(g, columns: Sequence) -> BoolColumn:
    """Elementwise AND/OR of the input columns; any missing input makes the row missing."""
    gate_type = GateType(g.gate_type if isinstance(g, GateCandidate) else g)
    cols = [as_bool_column(c) for c in columns]
    if len(cols) < 2:
        raise ConfigError(f"a gate needs at least 2 inputs, got {len(cols)}")
    if len({len(c) for c in cols}) != 1:
        raise DataError("gate input columns are not aligned")
    op = np.logical_and if gate_type is GateType.AND else np.logical_or
    out = cols[0].values.copy()
    for c in cols[1:]:
        op(out, c.values, out=out)
    valid = _joint_valid([c.valid for c in cols])
    if valid is not None:
        out &= valid
    return BoolColumn(out, valid)


def gate_significance(g: GateCandidate, columns: Sequence, output) -> float:
    """Phi between ``output`` and the gate expression; stored on ``g``."""
    g.significance = phi(contingency(output, eval_gate(g, columns)))
    return g.significance
