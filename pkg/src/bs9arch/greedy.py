"""Rule-based list schedules: the hand-style baseline and an upper bound
for the exact solver.

:func:`phase_schedule` runs the two check families one after the other.
Every ancilla executes its six gates back to back (no ancilla idle), and
each gate is placed at the earliest tick that the already placed gates
leave legal.  Nothing is optimised, which is what makes it a fair stand-in
for a schedule drawn by hand.
"""

from __future__ import annotations

from .circuits import Circuit
from .model import Layout, Role
from .schedule import DISJOINT, Schedule, data_qubits_of, pair_relations


class _Placer:
    def __init__(self, circuit: Circuit, layout: Layout) -> None:
        self.c = circuit
        self.rel: dict[int, dict[int, int]] = {}
        for (a, b), r in pair_relations(circuit, layout).items():
            self.rel.setdefault(a, {})[b] = r
            self.rel.setdefault(b, {})[a] = r
        self.start: dict[int, int] = {}
        # earliest tick for couplings on a data qubit: after its last rotation
        self.ready: dict[str, int] = {}

    def _clash(self, g: int, s: int, tentative: dict[int, int]) -> bool:
        gates = self.c.gates
        d = gates[g].duration
        for h, r in self.rel.get(g, {}).items():
            sh = self.start.get(h, tentative.get(h))
            if sh is None or h == g:
                continue
            if s < sh + gates[h].duration and sh < s + d and (r == DISJOINT or sh != s):
                return True
        return False

    def busy_until(self, qubit: str) -> int:
        gates = self.c.gates
        return max((s + gates[g].duration for g, s in self.start.items() if qubit in gates[g].qubits), default=0)

    def single(self, gid: int) -> int:
        """Place a one-qubit gate after everything already on its qubit."""
        g = self.c.gates[gid]
        s = max(self.busy_until(q) for q in g.qubits)
        while self._clash(gid, s, {}):
            s += 1
        self.start[gid] = s
        for q in g.qubits:
            self.ready[q] = s + g.duration
        return s + g.duration

    def ancilla(self, anc: str, earliest: int) -> int:
        """Place ``prep, rot, cz, cz, rot, meas`` contiguously."""
        gates = self.c.gates
        (prep,), (rot_in,), czs, (rot_out,), (meas,) = self.c.orders[anc][0]
        t = earliest
        while True:
            for first, second in (czs, czs[::-1]):
                plan = []
                s = t
                for gid in (prep, rot_in, first, second, rot_out, meas):
                    plan.append((gid, s))
                    s += gates[gid].duration
                if self._fits(plan):
                    for gid, s in plan:
                        self.start[gid] = s
                    return plan[-1][1] + 1
            t += 1

    def _fits(self, plan) -> bool:
        gates = self.c.gates
        tentative = dict(plan)
        for gid, s in plan:
            if any(s < self.ready.get(q, 0) for q in gates[gid].qubits):
                return False
            if self._clash(gid, s, tentative):
                return False
        return True


def _label_index(circuit: Circuit) -> dict[str, int]:
    return {g.label: g.id for g in circuit.gates}


def phase_schedule(circuit: Circuit, layout: Layout, first: Role = Role.Z_ANCILLA) -> Schedule:
    """Both check families in turn, the ``first`` family before the other.

    Data qubits take the ordering alternative that matches the phase order.
    The second family's ancillas are prepared only after every ancilla of
    the first family has been measured.
    """
    if first not in (Role.Z_ANCILLA, Role.X_ANCILLA):
        raise ValueError("first must be an ancilla role")
    p = _Placer(circuit, layout)
    labels = _label_index(circuit)
    data = [q.id for q in layout.by_role(Role.DATA)]
    second = Role.X_ANCILLA if first is Role.Z_ANCILLA else Role.Z_ANCILLA

    def rotate(kind: str) -> None:
        a, b = ("z_in", "x_in") if kind == "in" else ("x_out", "z_out")
        for d in data:
            p.single(labels[f"{a}:{d}"])
            p.single(labels[f"{b}:{d}"])

    if first is Role.X_ANCILLA:
        rotate("in")
    end = 0
    for a in layout.by_role(first):
        end = max(end, p.ancilla(a.id, 0))
    if first is Role.Z_ANCILLA:
        rotate("in")
    else:
        rotate("out")
    for a in layout.by_role(second):
        p.ancilla(a.id, end)
    if first is Role.Z_ANCILLA:
        rotate("out")
    makespan = max(s + circuit.gates[g].duration for g, s in p.start.items())
    return Schedule(
        circuit,
        dict(sorted(p.start.items())),
        makespan,
        data_qubits_of(layout),
        meta={"solver": "phase-greedy", "first": first.value},
    )


def list_schedule(circuit: Circuit, layout: Layout, priority: dict[int, float] | None = None) -> Schedule:
    """Serial list schedule following the first ordering alternative.

    Gates become ready once every gate of the previous segment on each of
    their qubits is placed; among ready gates the lowest ``priority`` (then
    id) goes first, at the earliest tick free of clashes.  Any circuit
    gets a legal schedule this way, which makes it a generic upper bound.
    """
    p = _Placer(circuit, layout)
    gates = circuit.gates
    prio = priority or {}
    preds: dict[int, set[int]] = {g.id: set() for g in gates}
    for chain in (alts[0] for alts in circuit.orders.values()):
        for prev, nxt in zip(chain, chain[1:]):
            for b in nxt:
                preds[b].update(prev)
    left = set(preds)
    while left:
        ready = [g for g in left if not (preds[g] & left)]
        gid = min(ready, key=lambda g: (prio.get(g, 0.0), g))
        s = max((p.start[a] + gates[a].duration for a in preds[gid]), default=0)
        s = max([s] + [p.busy_until(q) for q in gates[gid].qubits])
        while p._clash(gid, s, {}):
            s += 1
        p.start[gid] = s
        left.discard(gid)
    makespan = max((s + gates[g].duration for g, s in p.start.items()), default=0)
    return Schedule(circuit, dict(sorted(p.start.items())), makespan, data_qubits_of(layout), meta={"solver": "list"})


def upper_bound(circuit: Circuit, layout: Layout) -> int:
    """Makespan of a legal greedy schedule, a valid bound for the solver.

    The BS9 extraction uses the better phase schedule; other circuits the
    generic list schedule.
    """
    bound = list_schedule(circuit, layout).makespan
    if circuit.meta.get("name") == "bs9_extraction":
        bound = min([bound] + [phase_schedule(circuit, layout, r).makespan for r in (Role.Z_ANCILLA, Role.X_ANCILLA)])
    return bound


def hand_schedule(circuit: Circuit, layout: Layout) -> Schedule:
    """The stored hand-style baseline: ZZ checks first, then XX checks."""
    return phase_schedule(circuit, layout, Role.Z_ANCILLA)


__all__ = ["phase_schedule", "hand_schedule", "list_schedule", "upper_bound"]
