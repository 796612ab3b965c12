"""Tick-assigned schedules, the electronics constraint checker and idle
accounting.

Controller rules enforced by :func:`validate_schedule` (numbers follow the
enclosed-architecture constraint list):

1. A member running any operation (CPHASE included) needs every member
   nearer the block edge to be idle, inside a CPHASE, or running the same
   single-qubit broadcast.
2. Coherent single-qubit gates active in one block share kind and start
   tick (a broadcast).
3. At most one measurement-like operation (``M_Z`` or prep) per block.
4. CPHASE may join qubits of different blocks (a permission, never flagged).
5. CPHASEs active in one block share start tick and coupling side.
"""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping

from .circuits import Circuit, Gate
from .model import GateKind, Layout, Role, Side


@dataclass(frozen=True)
class Violation:
    constraint: str
    tick: int | None
    block: str | None
    qubits: tuple[str, ...]
    message: str

    def __str__(self) -> str:
        where = f" at tick {self.tick}" if self.tick is not None else ""
        blk = f" in block {self.block}" if self.block else ""
        return f"[{self.constraint}]{where}{blk}: {self.message}"


@dataclass(frozen=True)
class IdleReport:
    per_qubit: Mapping[str, int]
    data_idle: int
    ancilla_idle: int

    @property
    def total(self) -> int:
        return sum(self.per_qubit.values())


@dataclass
class Schedule:
    """A start tick for every gate of ``circuit``.

    ``makespan`` is the length of the extraction round in ticks.  Data
    qubits live for the whole round; ancillas live from preparation to
    measurement.  ``extras`` carries additional timed gates (dynamical
    decoupling pulses) that are not part of the circuit.
    """

    circuit: Circuit
    start: dict[int, int]
    makespan: int
    data_qubits: frozenset[str] = frozenset()
    extras: list[tuple[GateKind, str, int]] = field(default_factory=list)
    dd_qubits: frozenset[str] = frozenset()
    meta: dict = field(default_factory=dict)

    def end(self, gid: int) -> int:
        return self.start[gid] + self.circuit.gates[gid].duration

    # ---- timelines
    def lifetime(self, qubit: str) -> tuple[int, int]:
        """Half-open tick range during which ``qubit`` holds quantum data."""
        if qubit in self.data_qubits:
            return 0, self.makespan
        gates = self.circuit.gates_on(qubit)
        if not gates:
            return 0, 0
        return min(self.start[g.id] for g in gates), max(self.end(g.id) for g in gates)

    def busy_ticks(self, qubit: str) -> set[int]:
        ticks = set()
        for g in self.circuit.gates_on(qubit):
            ticks.update(range(self.start[g.id], self.end(g.id)))
        for kind, q, s in self.extras:
            if q == qubit:
                ticks.update(range(s, s + kind.duration))
        return ticks

    def idle_ticks(self, qubit: str) -> list[int]:
        lo, hi = self.lifetime(qubit)
        busy = self.busy_ticks(qubit)
        return [t for t in range(lo, hi) if t not in busy]

    def idle_kind(self, qubit: str) -> GateKind:
        return GateKind.IDLE if qubit in self.dd_qubits else GateKind.BARE_IDLE

    def idle_report(self) -> IdleReport:
        per = {q: len(self.idle_ticks(q)) for q in self.circuit.qubits}
        data = sum(v for q, v in per.items() if q in self.data_qubits)
        return IdleReport(per, data, sum(per.values()) - data)

    def idle_census(self) -> Counter:
        c: Counter = Counter()
        for q in self.circuit.qubits:
            n = len(self.idle_ticks(q))
            if n:
                c[self.idle_kind(q)] += n
        for kind, _, _ in self.extras:
            c[kind] += 1
        return c

    def timed_ops(self) -> list[tuple[int, GateKind, tuple[str, ...], int | None]]:
        """Every operation as ``(start, kind, qubits, gate id)`` sorted by time.

        Idle ticks appear as one-tick operations with gate id ``None``;
        explicit multi-tick waits appear once per tick with their gate id.
        """
        ops = []
        for g in self.circuit.gates:
            s = self.start[g.id]
            # waits span several ticks; each tick is a location of its own
            ticks = range(s, s + g.duration) if g.kind.is_idle else (s,)
            ops += [(t, g.kind, g.qubits, g.id) for t in ticks]
        ops += [(s, kind, (q,), None) for kind, q, s in self.extras]
        for q in self.circuit.qubits:
            kind = self.idle_kind(q)
            ops += [(t, kind, (q,), None) for t in self.idle_ticks(q)]
        order = {q: i for i, q in enumerate(self.circuit.qubits)}
        ops.sort(key=lambda o: (o[0], order[o[2][0]], o[3] if o[3] is not None else -1))
        return ops

    # ---- export
    def to_dict(self, layout: Layout | None = None, with_circuit: bool = False) -> dict:
        ticks = []
        active = _activity(self)
        for t in range(self.makespan):
            row: dict = {"tick": t, "qubits": {}}
            for q in self.circuit.qubits:
                act = active.get((q, t))
                if act is not None:
                    g = act
                    row["qubits"][q] = {"kind": g[0].value, "gate": g[2], "start": g[1]}
            if layout is not None:
                row["blocks"] = {
                    b.id: controller_signal(self, layout, b.id, t, active) for b in layout.blocks
                }
            ticks.append(row)
        return {
            "makespan": self.makespan,
            "start": {str(k): v for k, v in sorted(self.start.items())},
            "data_qubits": sorted(self.data_qubits),
            "dd_qubits": sorted(self.dd_qubits),
            "extras": [[k.value, q, s] for k, q, s in self.extras],
            "idle": self.idle_report().total,
            "ticks": ticks,
            "meta": self.meta,
        } | ({"circuit": self.circuit.to_dict()} if with_circuit else {})

    @classmethod
    def from_dict(cls, doc: Mapping, circuit: Circuit) -> "Schedule":
        return cls(
            circuit,
            {int(k): int(v) for k, v in doc["start"].items()},
            int(doc["makespan"]),
            frozenset(doc.get("data_qubits", ())),
            [(GateKind(k), q, int(s)) for k, q, s in doc.get("extras", ())],
            frozenset(doc.get("dd_qubits", ())),
            dict(doc.get("meta", {})),
        )

    def dump(self, path: str | Path, layout: Layout | None = None, with_circuit: bool = False) -> None:
        Path(path).write_text(json.dumps(self.to_dict(layout, with_circuit), indent=1) + "\n")

    def gantt(self) -> str:
        """Plain-text Gantt chart: one row per qubit, one column per tick."""
        symbol = {
            GateKind.PREP_ONE: "P",
            GateKind.MEASURE_Z: "M",
            GateKind.PHASE_HALF: "s",
            GateKind.PHASE_FULL: "Z",
            GateKind.X_HALF: "x",
            GateKind.X_FULL: "X",
            GateKind.CPHASE: "C",
            GateKind.IDLE: "-",
        }
        active = _activity(self)
        width = max(len(q) for q in self.circuit.qubits)
        lines = [" " * width + " " + "".join(str(t % 10) for t in range(self.makespan))]
        for q in self.circuit.qubits:
            lo, hi = self.lifetime(q)
            cells = []
            for t in range(self.makespan):
                act = active.get((q, t))
                if act is not None:
                    cells.append(symbol.get(act[0], "?"))
                elif lo <= t < hi:
                    cells.append("." if q not in self.dd_qubits else ",")
                else:
                    cells.append(" ")
            lines.append(f"{q:<{width}} " + "".join(cells))
        return "\n".join(lines) + "\n"


def data_qubits_of(layout: Layout) -> frozenset[str]:
    return frozenset(q.id for q in layout.by_role(Role.DATA))


def _activity(schedule: Schedule) -> dict[tuple[str, int], tuple[GateKind, int, int | None, tuple[str, ...]]]:
    act = {}
    for g in schedule.circuit.gates:
        s = schedule.start[g.id]
        for t in range(s, s + g.duration):
            for q in g.qubits:
                act[q, t] = (g.kind, s, g.id, g.qubits)
    for kind, q, s in schedule.extras:
        for t in range(s, s + kind.duration):
            act[q, t] = (kind, s, None, (q,))
    return act


def controller_signal(schedule: Schedule, layout: Layout, block: str, tick: int, active=None) -> list[str]:
    """Signals a block drives at ``tick``, e.g. ``["x90@3", "measure:z32"]``."""
    active = active if active is not None else _activity(schedule)
    out = []
    for m in layout.block(block).members:
        act = active.get((m, tick))
        if act is None or act[0].is_idle:
            continue
        kind, s, _, qubits = act
        if kind is GateKind.CPHASE:
            sig = f"cphase:{cphase_side(layout, layout.block(block), qubits).value}@{s}"
        elif kind.is_measurement_like:
            sig = f"{kind.value}:{m}"
        else:
            sig = f"{kind.value}@{s}"
        if sig not in out:
            out.append(sig)
    return out or ["quiet"]


def cphase_side(layout: Layout, block, qubits: tuple[str, ...]) -> Side:
    """Coupling side a block drives for a CPHASE on ``qubits``.

    When both qubits belong to the block the side seen from the member
    nearer the block edge is used; the coupling is one signal either way.
    """
    inside = [q for q in block.members if q in qubits]
    m = inside[0]
    other = qubits[0] if qubits[1] == m else qubits[1]
    return layout.coupling_side(m, other)


def validate_schedule(schedule: Schedule, circuit: Circuit, layout: Layout) -> list[Violation]:
    """Check a schedule against precedence, occupancy and controller rules."""
    out: list[Violation] = []
    gates = circuit.gates
    if set(schedule.start) != {g.id for g in gates}:
        missing = sorted({g.id for g in gates} - set(schedule.start))
        out.append(Violation("assignment", None, None, (), f"gates without start tick: {missing}"))
        return out
    for g in gates:
        s = schedule.start[g.id]
        if s < 0 or s + g.duration > schedule.makespan:
            out.append(Violation("horizon", s, None, g.qubits, f"gate {g.id} outside [0, {schedule.makespan})"))
    for kind, q, s in schedule.extras:
        if s < 0 or s + kind.duration > schedule.makespan:
            out.append(Violation("horizon", s, None, (q,), f"{kind.value} pulse on {q} outside the round"))

    # occupancy
    seen: dict[tuple[str, int], str] = {}
    for g in gates:
        for t in range(schedule.start[g.id], schedule.end(g.id)):
            for q in g.qubits:
                if (q, t) in seen:
                    out.append(Violation("overlap", t, None, (q,), f"{q} runs {seen[q, t]} and gate {g.id}"))
                seen[q, t] = f"gate {g.id}"
    for kind, q, s in schedule.extras:
        for t in range(s, s + kind.duration):
            if (q, t) in seen:
                out.append(Violation("overlap", t, None, (q,), f"{q} runs {seen[q, t]} and a {kind.value} pulse"))
            seen[q, t] = f"{kind.value} pulse"

    # precedence: some ordering alternative must be honoured per qubit
    for q, alts in circuit.orders.items():
        if not any(_chain_ok(schedule, gates, chain) for chain in alts):
            out.append(Violation("precedence", None, None, (q,), f"gate order on {q} matches no allowed chain"))

    # adjacency of two-qubit gates
    for g in gates:
        if g.kind is GateKind.CPHASE and layout.coupling(*g.qubits) is None:
            out.append(Violation("coupling", schedule.start[g.id], None, g.qubits, "CPHASE on uncoupled pair"))

    active = _activity(schedule)
    for t in range(schedule.makespan):
        for block in layout.blocks:
            out.extend(_block_violations(layout, block, t, active))
    return out


def _chain_ok(schedule: Schedule, gates, chain) -> bool:
    for prev, nxt in zip(chain, chain[1:]):
        latest_end = max(schedule.start[a] + gates[a].duration for a in prev)
        if min(schedule.start[b] for b in nxt) < latest_end:
            return False
    return True


def _block_violations(layout: Layout, block, t: int, active) -> list[Violation]:
    out = []
    acts = []
    for pos, m in enumerate(block.members):
        a = active.get((m, t))
        if a is not None and not a[0].is_idle:
            acts.append((pos, m, a))
    if not acts:
        return out
    singles = [(pos, m, a) for pos, m, a in acts if a[0].is_coherent_single]
    meas = [(pos, m, a) for pos, m, a in acts if a[0].is_measurement_like]
    cz = [(pos, m, a) for pos, m, a in acts if a[0] is GateKind.CPHASE]

    if len({(a[0], a[1]) for _, _, a in singles}) > 1:
        desc = ", ".join(f"{m}:{a[0].value}@{a[1]}" for _, m, a in singles)
        out.append(Violation("2", t, block.id, tuple(m for _, m, _ in singles), f"differing single-qubit signals {desc}"))
    if len(meas) > 1:
        out.append(Violation("3", t, block.id, tuple(m for _, m, _ in meas), "more than one measurement"))
    if cz:
        sigs = {(cphase_side(layout, block, a[3]), a[1]) for _, _, a in cz}
        if len(sigs) > 1:
            out.append(Violation("5", t, block.id, tuple(m for _, m, _ in cz), "parallel CPHASE with incompatible coupling"))
    # routing over nearer members; a nearer member inside a CPHASE is the
    # one exemption
    for pos, m, a in acts:
        for pos2, m2, a2 in acts:
            if pos2 >= pos or a2[0] is GateKind.CPHASE:
                continue
            same_broadcast = a[0].is_coherent_single and (a2[0], a2[1]) == (a[0], a[1])
            if not same_broadcast:
                out.append(Violation("1", t, block.id, (m, m2), f"signal for {m} passes over active {m2}"))
    return out


NO_CONFLICT, SAME_START, DISJOINT = 0, 1, 2


def pair_relations(circuit: Circuit, layout: Layout) -> dict[tuple[int, int], int]:
    """Pairwise form of the controller rules.

    For gates ``g < h`` touching a common block the result says whether they
    may overlap freely (absent), only when started together
    (``SAME_START``) or never (``DISJOINT``).  Every block rule is a
    condition on pairs of simultaneously active operations, so these
    relations are equivalent to :func:`_block_violations`; they are derived
    from it rather than restated.  Gates sharing a qubit are always
    ``DISJOINT``.
    """
    gates = circuit.gates
    by_block: dict[str, list[int]] = {}
    for g in gates:
        for q in g.qubits:
            b = layout.block_of(q)
            if b is not None and g.id not in by_block.setdefault(b, []):
                by_block[b].append(g.id)
    rel: dict[tuple[int, int], int] = {}
    for q in circuit.qubits:
        ids = [g.id for g in circuit.gates_on(q)]
        for i, a in enumerate(ids):
            for b in ids[i + 1 :]:
                rel[min(a, b), max(a, b)] = DISJOINT
    for bid, ids in by_block.items():
        block = layout.block(bid)
        for i, a in enumerate(ids):
            for b in ids[i + 1 :]:
                key = (min(a, b), max(a, b))
                if rel.get(key) == DISJOINT:
                    continue
                ga, gb = gates[key[0]], gates[key[1]]
                if _clash(layout, block, ga, 0, gb, 0, 0):
                    rel[key] = DISJOINT
                    continue
                diff = (ga.duration > 1 and _clash(layout, block, ga, 0, gb, 1, 1)) or (
                    gb.duration > 1 and _clash(layout, block, gb, 0, ga, 1, 1)
                )
                if diff:
                    rel[key] = SAME_START
    return rel


def _clash(layout: Layout, block, g: Gate, sg: int, h: Gate, sh: int, tick: int) -> bool:
    active = {}
    for gate, s in ((g, sg), (h, sh)):
        for q in gate.qubits:
            active[q, tick] = (gate.kind, s, gate.id, gate.qubits)
    return bool(_block_violations(layout, block, tick, active))
