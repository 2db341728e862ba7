"""Static fault trees: structure, invariants, probabilities and export."""

from __future__ import annotations

import enum
import json
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .data import Statistic
from .errors import DataError, TreeParseError, TreeValidationError
from .significance import GateType
from .threshold import Threshold, discretize

__all__ = [
    "FORMAT_VERSION",
    "EventKind",
    "Event",
    "Gate",
    "FaultTree",
    "validate",
    "depth",
    "annotate_probabilities",
    "to_dot",
    "to_json",
    "from_json",
    "tree_to_dict",
    "tree_from_dict",
]

FORMAT_VERSION = 1


class EventKind(str, enum.Enum):
    TLE = "TLE"
    BASIC = "BASIC"
    INTERMEDIATE = "INTERMEDIATE"


@dataclass
class Event:
    id: str
    kind: EventKind
    label: str
    threshold: Threshold | None = None
    p: float | None = None

    def __post_init__(self):
        self.kind = EventKind(self.kind)

    @property
    def sensor(self) -> str | None:
        return self.threshold.sensor_name if self.threshold else None

    @classmethod
    def top(cls, failure_name: str) -> "Event":
        return cls(failure_name, EventKind.TLE, failure_name)

    @classmethod
    def basic(cls, t: Threshold, p: float | None = None) -> "Event":
        return cls(t.variable, EventKind.BASIC, t.label, t, p)


@dataclass
class Gate:
    type: GateType
    output: str
    inputs: tuple[str, ...]
    significance: float

    def __post_init__(self):
        self.type = GateType(self.type)
        self.inputs = tuple(self.inputs)


@dataclass
class FaultTree:
    """Events keyed by id plus gates in attachment order (top gate first)."""

    tle: str
    events: dict[str, Event] = field(default_factory=dict)
    gates: list[Gate] = field(default_factory=list)
    significance: float | None = None
    statistic: Statistic | None = None

    @classmethod
    def empty(cls, failure_name: str, statistic=None) -> "FaultTree":
        stat = Statistic.parse(statistic) if statistic is not None else None
        return cls(failure_name, {failure_name: Event.top(failure_name)}, [], None, stat)

    @property
    def top_gate(self) -> Gate | None:
        for g in self.gates:
            if g.output == self.tle:
                return g
        return None

    def gate_for(self, event_id: str) -> Gate | None:
        for g in self.gates:
            if g.output == event_id:
                return g
        return None

    def basic_events(self) -> list[Event]:
        return [e for e in self.events.values() if e.kind is EventKind.BASIC]

    def variables(self) -> set[str]:
        """Sensor names used anywhere in the tree."""
        return {e.sensor for e in self.events.values() if e.sensor is not None}

    def attach(self, output_id: str, gate_type, inputs, significance: float) -> Gate:
        """Add a gate under ``output_id`` whose inputs are new basic events.

        ``inputs`` are Threshold objects or Events.
        """
        out = self.events[output_id]
        if out.kind is EventKind.BASIC:
            out.kind = EventKind.INTERMEDIATE
        ids = []
        for item in inputs:
            ev = item if isinstance(item, Event) else Event.basic(item)
            self.events[ev.id] = ev
            ids.append(ev.id)
        gate = Gate(gate_type, output_id, tuple(ids), significance)
        self.gates.append(gate)
        top = self.top_gate
        self.significance = top.significance if top is not None else None
        return gate


def validate(t: FaultTree, max_inputs: int | None = 3, require_probabilities: bool = False,
             check_significance: bool = True) -> None:
    """Raise TreeValidationError on the first broken invariant.

    ``check_significance=False`` skips the score checks, for hand-written
    trees such as generator ground truths.
    """
    if t.tle not in t.events:
        raise TreeValidationError(f"top event {t.tle!r} is not among the events")
    for eid, ev in t.events.items():
        if ev.id != eid:
            raise TreeValidationError(f"event stored under {eid!r} has id {ev.id!r}")
    tles = [e.id for e in t.events.values() if e.kind is EventKind.TLE]
    if tles != [t.tle]:
        raise TreeValidationError(f"expected exactly one TLE ({t.tle!r}), found {tles}")

    producers: dict[str, Gate] = {}
    consumers: dict[str, Gate] = {}
    for g in t.gates:
        if not isinstance(g.type, GateType):
            raise TreeValidationError(f"unknown gate type {g.type!r}")
        lo, hi = 2, max_inputs if max_inputs is not None else len(g.inputs)
        if not lo <= len(g.inputs) <= hi:
            raise TreeValidationError(
                f"gate under {g.output!r} has {len(g.inputs)} inputs, allowed {lo}..{hi}")
        if len(set(g.inputs)) != len(g.inputs):
            raise TreeValidationError(f"gate under {g.output!r} repeats an input")
        if g.output in producers:
            raise TreeValidationError(f"event {g.output!r} is the output of two gates")
        producers[g.output] = g
        for eid in (g.output, *g.inputs):
            if eid not in t.events:
                raise TreeValidationError(f"gate refers to unknown event {eid!r}")
        for eid in g.inputs:
            if eid == t.tle:
                raise TreeValidationError("the TLE cannot be a gate input")
            if eid in consumers:
                raise TreeValidationError(f"event {eid!r} feeds more than one gate")
            consumers[eid] = g

    if t.gates and t.tle not in producers:
        raise TreeValidationError("no gate produces the TLE")

    # reachability and acyclicity from the TLE
    seen = {t.tle}
    on_path: set[str] = set()

    def visit(eid):
        on_path.add(eid)
        g = producers.get(eid)
        if g is not None:
            for child in g.inputs:
                if child in on_path:
                    raise TreeValidationError(f"cycle through event {child!r}")
                if child not in seen:
                    seen.add(child)
                    visit(child)
        on_path.discard(eid)

    visit(t.tle)
    unreachable = sorted(set(t.events) - seen)
    if unreachable:
        raise TreeValidationError(f"events not reachable from the TLE: {unreachable}")

    sensors: dict[str, str] = {}
    for ev in t.events.values():
        if ev.kind is EventKind.TLE:
            continue
        want = EventKind.INTERMEDIATE if ev.id in producers else EventKind.BASIC
        if ev.kind is not want:
            raise TreeValidationError(f"event {ev.id!r} is {ev.kind.value}, expected {want.value}")
        if ev.threshold is None:
            raise TreeValidationError(f"event {ev.id!r} carries no threshold")
        other = sensors.setdefault(ev.threshold.sensor_name, ev.id)
        if other != ev.id:
            raise TreeValidationError(
                f"sensor {ev.threshold.sensor_name!r} used by both {other!r} and {ev.id!r}")
        if ev.p is not None and not 0.0 <= ev.p <= 1.0:
            raise TreeValidationError(f"event {ev.id!r} has probability {ev.p} outside [0, 1]")
        if require_probabilities and ev.kind is EventKind.BASIC and ev.p is None:
            raise TreeValidationError(f"basic event {ev.id!r} has no probability")

    if not check_significance:
        return
    top = t.top_gate
    if top is None:
        if t.significance is not None:
            raise TreeValidationError("gateless tree cannot carry a significance")
        return
    for g in t.gates:
        if g.significance is None:
            raise TreeValidationError(f"gate under {g.output!r} has no significance")
    for g in t.gates:
        if g.significance < top.significance:
            raise TreeValidationError(
                f"gate under {g.output!r} has significance {g.significance} below the top "
                f"gate's {top.significance}")
    if t.significance != top.significance:
        raise TreeValidationError(
            f"tree significance {t.significance} differs from top gate {top.significance}")


def depth(t: FaultTree) -> int:
    """Gates on the longest path from the TLE down to a basic event."""
    if not t.gates:
        raise TreeValidationError("empty tree")
    producers = {g.output: g for g in t.gates}

    def down(eid, guard):
        g = producers.get(eid)
        if g is None:
            return 0
        if eid in guard:
            raise TreeValidationError(f"cycle through event {eid!r}")
        guard = guard | {eid}
        return 1 + max(down(c, guard) for c in g.inputs)

    return down(t.tle, frozenset())


def annotate_probabilities(t: FaultTree, d) -> FaultTree:
    """Set each basic event's p to its firing rate in the (balanced) dataset."""
    base = getattr(d, "base", d)
    for ev in t.basic_events():
        th = ev.threshold
        if th is None:
            raise DataError(f"basic event {ev.id!r} has no threshold")
        col = base.sensor(th.sensor_name, th.statistic)
        var = discretize(col, th).values
        vals = var.values if var.valid is None else var.values[var.valid]
        ev.p = float(np.count_nonzero(vals) / len(vals)) if len(vals) else None
    return t


# --- export -------------------------------------------------------------------

def _dot_escape(text: str) -> str:
    return text.replace("\\", "\\\\").replace('"', '\\"')


def _ordered_events(t: FaultTree) -> list[str]:
    """Event ids breadth-first from the TLE, then any stragglers in insertion order."""
    producers = {g.output: g for g in t.gates}
    order, queue, seen = [], deque([t.tle]), {t.tle}
    while queue:
        eid = queue.popleft()
        order.append(eid)
        g = producers.get(eid)
        if g is not None:
            for c in g.inputs:
                if c not in seen:
                    seen.add(c)
                    queue.append(c)
    order.extend(e for e in t.events if e not in seen)
    return order


def to_dot(t: FaultTree, show_gain: bool = False) -> str:
    """Graphviz digraph; edges run input -> gate -> output."""
    ids = {eid: f"e{i}" for i, eid in enumerate(_ordered_events(t))}
    lines = ["digraph fault_tree {", "  rankdir=BT;", '  node [fontname="Helvetica"];']
    for eid, nid in ids.items():
        ev = t.events[eid]
        parts = [ev.label]
        if show_gain and ev.threshold is not None:
            parts.append(f"gain {ev.threshold.gain:.2f}")
        if ev.kind is EventKind.TLE:
            shape = "house"
        elif ev.kind is EventKind.BASIC:
            shape = "circle"
            if ev.p is not None:
                parts.append(f"p = {ev.p:.2f}")
        else:
            shape = "ellipse"
        label = "\\n".join(_dot_escape(x) for x in parts)
        lines.append(f'  {nid} [shape={shape}, label="{label}"];')
    for i, g in enumerate(t.gates):
        lines.append(f'  g{i} [shape=box, label="{g.type.value}\\n{g.significance:.2f}"];')
    for i, g in enumerate(t.gates):
        for c in g.inputs:
            lines.append(f"  {ids[c]} -> g{i};")
        lines.append(f"  g{i} -> {ids[g.output]};")
    lines.append("}")
    return "\n".join(lines) + "\n"


def tree_to_dict(t: FaultTree) -> dict:
    return {
        "format_version": FORMAT_VERSION,
        "tle": t.tle,
        "statistic": t.statistic.value if t.statistic is not None else None,
        "significance": t.significance,
        "events": [
            {"id": e.id, "kind": e.kind.value, "label": e.label,
             "threshold": e.threshold.to_dict() if e.threshold else None, "p": e.p}
            for e in t.events.values()
        ],
        "gates": [
            {"type": g.type.value, "output": g.output, "inputs": list(g.inputs),
             "significance": g.significance}
            for g in t.gates
        ],
    }


def to_json(t: FaultTree) -> str:
    return json.dumps(tree_to_dict(t), indent=2, ensure_ascii=False) + "\n"


def _need(doc, key, where, kinds):
    if not isinstance(doc, dict) or key not in doc:
        raise TreeParseError(f"{where}: missing field {key!r}")
    value = doc[key]
    if not isinstance(value, kinds):
        raise TreeParseError(f"{where}.{key}: unexpected type {type(value).__name__}")
    return value


def _number(value, where):
    if value is None:
        return None
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise TreeParseError(f"{where}: expected a number, got {value!r}")
    return float(value)


def tree_from_dict(doc: dict) -> FaultTree:
    if not isinstance(doc, dict):
        raise TreeParseError("$: expected a JSON object")
    version = _need(doc, "format_version", "$", int)
    if version != FORMAT_VERSION:
        raise TreeParseError(f"$.format_version: unsupported version {version}")
    tle = _need(doc, "tle", "$", str)
    stat = doc.get("statistic")
    try:
        stat = Statistic.parse(stat) if stat is not None else None
    except DataError as exc:
        raise TreeParseError(f"$.statistic: {exc}") from None

    events = {}
    for i, e in enumerate(_need(doc, "events", "$", list)):
        where = f"$.events[{i}]"
        eid = _need(e, "id", where, str)
        kind = _need(e, "kind", where, str)
        try:
            kind = EventKind(kind)
        except ValueError:
            raise TreeParseError(f"{where}.kind: unknown event kind {kind!r}") from None
        threshold = None
        if e.get("threshold") is not None:
            try:
                threshold = Threshold.from_dict(e["threshold"])
            except (KeyError, TypeError, ValueError, DataError) as exc:
                raise TreeParseError(f"{where}.threshold: {exc!r}") from None
        label = e.get("label")
        if label is None:
            label = threshold.label if threshold is not None else eid
        if eid in events:
            raise TreeParseError(f"{where}.id: duplicate event id {eid!r}")
        events[eid] = Event(eid, kind, str(label), threshold, _number(e.get("p"), f"{where}.p"))

    gates = []
    for i, g in enumerate(_need(doc, "gates", "$", list)):
        where = f"$.gates[{i}]"
        gtype = _need(g, "type", where, str)
        try:
            gtype = GateType(gtype.upper())
        except ValueError:
            raise TreeParseError(f"{where}.type: unknown gate type {gtype!r}") from None
        output = _need(g, "output", where, str)
        inputs = _need(g, "inputs", where, list)
        for j, ref in enumerate([output, *inputs]):
            if ref not in events:
                field_name = "output" if j == 0 else f"inputs[{j - 1}]"
                raise TreeParseError(f"{where}.{field_name}: unknown event {ref!r}")
        sig = _number(g.get("significance"), f"{where}.significance")
        gates.append(Gate(gtype, output, tuple(inputs), sig))

    if tle not in events:
        raise TreeParseError(f"$.tle: unknown event {tle!r}")
    return FaultTree(tle, events, gates, _number(doc.get("significance"), "$.significance"), stat)


def from_json(text: str) -> FaultTree:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise TreeParseError(f"line {exc.lineno} column {exc.colno}: {exc.msg}") from None
    return tree_from_dict(doc)
