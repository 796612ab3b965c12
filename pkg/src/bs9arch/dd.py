"""Dynamical-decoupling insertion for data qubits.

Every operation on a data qubit is wrapped in its own echo block::

    X  [operation]  X  [wait]

The second wait lasts at least as long as the operation, so the
dephasing picked up while the operation runs is refocused during the
wait.  Idle ticks the scheduler leaves between blocks extend the wait of
the block before them; the idle stretch at the start of the round
extends the last block of the previous round.  The blocks of a data
qubit therefore tile its whole timeline and every idle tick runs under
decoupling (gate kind ``I`` instead of ``I*``).

The decoupled circuit is rescheduled from scratch with the exact solver
under all controller rules, with each data qubit keeping the operation
order of the schedule it came from.
"""

from __future__ import annotations

from dataclasses import dataclass

from .circuits import Circuit, Gate
from .greedy import list_schedule
from .model import GateKind, Layout
from .schedule import Schedule, data_qubits_of, validate_schedule
from .solver import SchedulingError, minimize_idle, minimize_makespan


class DDError(SchedulingError):
    """Decoupling could not be inserted."""


@dataclass(frozen=True)
class DDBlock:
    """One ``X - wait - X - wait`` block on a data qubit.

    ``start`` is the first pulse's tick; ``waits`` are the two wait
    lengths in ticks (the first covers the wrapped operation, the second
    may run past the end of the round and wrap around).  ``covers`` holds
    the ids of the operations inside the block.
    """

    qubit: str
    start: int
    second: int
    waits: tuple[int, int]
    covers: tuple[int, ...]


def dd_circuit(schedule: Schedule, layout: Layout) -> Circuit:
    """Circuit with echo pulses and minimum waits around data operations.

    Data qubits get a single fixed order: their operations in the order
    ``schedule`` runs them, each as ``X, op, X, wait``.  Ancilla orders are
    left unchanged.
    """
    base = schedule.circuit
    gates: list[Gate] = list(base.gates)
    data = data_qubits_of(layout)
    orders = {q: alts for q, alts in base.orders.items() if q not in data}

    def add(kind: GateKind, q: str, label: str, length: int = 0) -> int:
        gates.append(Gate(len(gates), kind, (q,), label, length))
        return len(gates) - 1

    for q in base.qubits:
        if q not in data:
            continue
        ops = sorted((g for g in base.gates_on(q)), key=lambda g: (schedule.start[g.id], g.id))
        chain = []
        for i, g in enumerate(ops):
            a = add(GateKind.X_FULL, q, f"dd_x:{q}:{i}:a")
            b = add(GateKind.X_FULL, q, f"dd_x:{q}:{i}:b")
            w = add(GateKind.IDLE, q, f"dd_wait:{q}:{i}", length=g.duration)
            chain += [(a,), (g.id,), (b,), (w,)]
        orders[q] = (tuple(chain),)
    meta = dict(base.meta, dd=True)
    return Circuit(base.qubits, tuple(gates), orders, meta)


def insert_dd(
    schedule: Schedule,
    layout: Layout,
    *,
    ancilla_idle: int | None = 0,
    horizon: int | None = None,
    engine: str = "auto",
    time_limit: float | None = 300.0,
    workers: int = 8,
) -> Schedule:
    """Decoupled, rescheduled version of ``schedule``.

    Decoupled data idle is cheap while a waiting ancilla still idles bare,
    so by default the shortest schedule whose ancillas never wait is
    returned (``ancilla_idle`` caps their total idle).  With
    ``ancilla_idle=None`` the makespan is minimised first and the ancilla
    idle second.  ``horizon`` bounds the capped search; by default it is
    half again the length of a list schedule.  A schedule whose data
    qubits run no operation is returned unchanged.

    Raises
    ------
    DDError
        If no schedule within ``horizon`` meets the ancilla idle cap.
    """
    data = data_qubits_of(layout)
    if not any(q in data for g in schedule.circuit.gates for q in g.qubits):
        return schedule
    circ = dd_circuit(schedule, layout)
    base = schedule.circuit.gates
    order = {q: sorted(schedule.circuit.gates_on(q), key=lambda h: (schedule.start[h.id], h.id)) for q in data}
    prio = {g.id: float(schedule.start[g.id]) for g in base}
    for g in circ.gates[len(base) :]:
        _, q, i, *rest = g.label.split(":")
        host = order[q][int(i)]
        prio[g.id] = schedule.start[host.id] + (-0.5 if rest == ["a"] else 0.5)
    bound = list_schedule(circ, layout, prio)
    if validate_schedule(bound, circ, layout):
        raise DDError("list schedule of the decoupled circuit is not legal")
    kw = dict(engine=engine, time_limit=time_limit, workers=workers)
    if ancilla_idle is None:
        ms = minimize_makespan(circ, layout, bound.makespan, **kw)
        out = minimize_idle(circ, layout, ms.makespan, **kw).schedule
    else:
        if horizon is None:
            horizon = bound.makespan + max(16, bound.makespan // 2)
        try:
            out = minimize_makespan(circ, layout, horizon, ancilla_idle_cap=ancilla_idle, **kw).schedule
        except SchedulingError as exc:
            raise DDError(f"no decoupled schedule within {horizon} ticks with ancilla idle <= {ancilla_idle}") from exc
    return Schedule(
        circ,
        out.start,
        out.makespan,
        data,
        dd_qubits=data,
        meta=dict(out.meta, dd="echo", ancilla_idle_cap=ancilla_idle),
    )


def dd_blocks(schedule: Schedule) -> list[DDBlock]:
    """Recover the echo blocks of a decoupled schedule."""
    circ = schedule.circuit
    pulses: dict[tuple[str, int], dict[str, Gate]] = {}
    for g in circ.gates:
        if g.label.startswith("dd_x:") or g.label.startswith("dd_wait:"):
            _, q, i, *rest = g.label.split(":")
            pulses.setdefault((q, int(i)), {})[rest[0] if rest else "w"] = g
    blocks = []
    by_qubit: dict[str, list[int]] = {}
    for q, i in sorted(pulses):
        by_qubit.setdefault(q, []).append(i)
    for q, idx in by_qubit.items():
        starts = [schedule.start[pulses[q, i]["a"].id] for i in idx]
        for k, i in enumerate(idx):
            a, b = pulses[q, i]["a"], pulses[q, i]["b"]
            sa, sb = schedule.start[a.id], schedule.start[b.id]
            nxt = starts[k + 1] if k + 1 < len(idx) else starts[0] + schedule.makespan
            covers = tuple(
                g.id
                for g in circ.gates_on(q)
                if not g.label.startswith("dd_") and sa < schedule.start[g.id] < sb
            )
            blocks.append(DDBlock(q, sa, sb, (sb - sa - a.duration, nxt - sb - b.duration), covers))
    return blocks


__all__ = ["DDBlock", "DDError", "dd_blocks", "dd_circuit", "insert_dd"]
