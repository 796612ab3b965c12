"""Time-indexed integer program for extraction schedules.

Binary ``x[g, s]`` says gate ``g`` starts at tick ``s``.  Precedence is
written in the cumulative form ``sum_{s'<=s} x[b, s'] <= sum_{s'<=s-d_a}
x[a, s']``, which is much tighter than a constraint on start-time
expressions; an ordering alternative of a data qubit relaxes its edges by
``1 - y``.  Controller rules become per-block, per-tick packing rows over
broadcast-signal variables.

The model is exported as plain arrays (:class:`IPModel`) so that it can be
solved either with HiGHS through :func:`scipy.optimize.milp` or by the
LP-based branch and bound of :mod:`bs9arch.solver`.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np
from scipy.optimize import Bounds, LinearConstraint, milp
from scipy.sparse import coo_matrix, csr_matrix

from .circuits import Circuit
from .model import GateKind, Layout
from .schedule import Schedule, cphase_side, data_qubits_of


@dataclass
class IPModel:
    c: np.ndarray
    A: csr_matrix
    lo: np.ndarray
    hi: np.ndarray
    integrality: np.ndarray
    lb: np.ndarray
    ub: np.ndarray
    x_index: dict[tuple[int, int], int]
    horizon: int
    objective: str
    offset: float = 0.0

    @property
    def n_vars(self) -> int:
        return len(self.c)

    @property
    def n_binary(self) -> int:
        return int(self.integrality.sum())

    @property
    def n_constraints(self) -> int:
        return self.A.shape[0]

    def starts(self, sol: np.ndarray) -> dict[int, int]:
        out = {}
        for (gid, s), v in self.x_index.items():
            if sol[v] > 0.5:
                out[gid] = s
        return out


@dataclass
class IPResult:
    schedule: Schedule | None
    objective: float | None
    status: str
    n_vars: int
    n_constraints: int
    nonzeros: int
    seconds: float


class _Rows:
    def __init__(self) -> None:
        self.n = 0
        self.lb: list[float] = []
        self.ub: list[float] = []
        self.integ: list[int] = []
        self.rows: list[tuple[dict[int, float], float, float]] = []

    def var(self, lb=0.0, ub=1.0, integer=True) -> int:
        self.lb.append(lb)
        self.ub.append(ub)
        self.integ.append(1 if integer else 0)
        self.n += 1
        return self.n - 1

    def row(self, coeffs: dict[int, float], lo: float, hi: float) -> None:
        if coeffs:
            self.rows.append((coeffs, lo, hi))


def build_model(circuit: Circuit, layout: Layout, makespan: int, objective: str = "idle") -> IPModel:
    """Time-indexed model at horizon ``makespan``.

    ``objective="idle"`` sums prep-to-measure spans of the ancillas;
    ``"makespan"`` minimises a continuous completion tick.
    """
    gates = circuit.gates
    H = makespan
    m = _Rows()
    x: dict[tuple[int, int], int] = {}
    for g in gates:
        for s in range(H - g.duration + 1):
            x[g.id, s] = m.var()
        m.row({x[g.id, s]: 1.0 for s in range(H - g.duration + 1)}, 1, 1)

    def started_by(gid: int, s: int) -> dict[int, float]:
        d = gates[gid].duration
        return {x[gid, u]: 1.0 for u in range(0, min(s, H - d) + 1)}

    def active(gid: int, t: int) -> dict[int, float]:
        d = gates[gid].duration
        return {x[gid, s]: 1.0 for s in range(max(0, t - d + 1), min(t, H - d) + 1)}

    def add(*exprs: dict[int, float]) -> dict[int, float]:
        out: dict[int, float] = {}
        for e in exprs:
            for k, v in e.items():
                out[k] = out.get(k, 0.0) + v
        return out

    def precedence(a: int, b: int, y: int | None) -> None:
        da = gates[a].duration
        for s in range(H - gates[b].duration + 1):
            e = started_by(b, s)
            for k, v in started_by(a, s - da).items() if s - da >= 0 else ():
                e[k] = e.get(k, 0.0) - v
            if y is None:
                m.row(e, -np.inf, 0)
            else:
                e[y] = e.get(y, 0.0) + 1.0
                m.row(e, -np.inf, 1)

    for q, alts in circuit.orders.items():
        per_alt = []
        for chain in alts:
            es = set()
            for prev, nxt in zip(chain, chain[1:]):
                es.update((a, b) for a in prev for b in nxt)
            per_alt.append(es)
        common = set.intersection(*per_alt)
        for a, b in sorted(common):
            precedence(a, b, None)
        if len(alts) > 1:
            ys = [m.var() for _ in alts]
            m.row({y: 1.0 for y in ys}, 1, 1)
            for y, es in zip(ys, per_alt):
                for a, b in sorted(es - common):
                    precedence(a, b, y)

    for q in circuit.qubits:
        on_q = [g.id for g in circuit.gates_on(q)]
        for t in range(H):
            m.row(add(*(active(gid, t) for gid in on_q)), -np.inf, 1)

    for b in layout.blocks:
        members = list(b.members)
        singles = [g for g in gates if g.kind.is_coherent_single and g.qubits[0] in members]
        meas = [g for g in gates if g.kind.is_measurement_like and g.qubits[0] in members]
        czs = [g for g in gates if g.kind is GateKind.CPHASE and set(members) & set(g.qubits)]
        sig: dict[tuple, int] = {}
        for g in singles:
            for s in range(H - g.duration + 1):
                key = ("s", g.kind, s)
                if key not in sig:
                    sig[key] = m.var()
                m.row({x[g.id, s]: 1.0, sig[key]: -1.0}, -np.inf, 0)
        for g in czs:
            side = cphase_side(layout, b, g.qubits)
            for s in range(H - g.duration + 1):
                key = ("c", side, s)
                if key not in sig:
                    sig[key] = m.var()
                m.row({x[g.id, s]: 1.0, sig[key]: -1.0}, -np.inf, 0)
        for t in range(H):
            single_sig: dict[int, float] = {}
            cz_sig: dict[int, float] = {}
            for key, v in sig.items():
                dur = key[1].duration if key[0] == "s" else GateKind.CPHASE.duration
                if key[2] <= t < key[2] + dur:
                    (single_sig if key[0] == "s" else cz_sig)[v] = 1.0
            # one broadcast kind, or one measurement, never both
            m.row(add(single_sig, *(active(g.id, t) for g in meas)), -np.inf, 1)
            m.row(cz_sig, -np.inf, 1)
            # routing over nearer members: only CPHASE, idling, or the
            # same broadcast may lie under a farther member's signal
            for i, near in enumerate(members):
                near_single = [g for g in singles if g.qubits[0] == near]
                near_meas = [g for g in meas if g.qubits[0] == near]
                for far in members[i + 1 :]:
                    far_all = [g for g in gates if far in g.qubits and near not in g.qubits and not g.kind.is_idle]
                    far_other = [g for g in far_all if not g.kind.is_coherent_single]
                    m.row(add(*(active(g.id, t) for g in far_all + near_meas)), -np.inf, 1)
                    m.row(add(*(active(g.id, t) for g in far_other + near_single)), -np.inf, 1)

    data = data_qubits_of(layout)
    offset = 0.0
    if objective == "idle":
        c = np.zeros(m.n)
        for q, alts in circuit.orders.items():
            if q in data:
                continue
            first, last = alts[0][0][0], alts[0][-1][0]
            for s in range(H - gates[last].duration + 1):
                c[x[last, s]] += s
            for s in range(H - gates[first].duration + 1):
                c[x[first, s]] -= s
    elif objective == "makespan":
        cmax = m.var(0, H, integer=False)
        c = np.zeros(m.n)
        c[cmax] = 1.0
        for g in gates:
            e = {x[g.id, s]: -(s + g.duration) for s in range(H - g.duration + 1)}
            e[cmax] = 1.0
            m.row(e, 0, np.inf)
    else:
        raise ValueError(f"unknown objective {objective!r}")

    rows, cols, vals, lo, hi = [], [], [], [], []
    for i, (coeffs, l, h) in enumerate(m.rows):
        for k, v in coeffs.items():
            rows.append(i)
            cols.append(k)
            vals.append(v)
        lo.append(l)
        hi.append(h)
    A = coo_matrix((vals, (rows, cols)), shape=(len(m.rows), m.n)).tocsr()
    return IPModel(
        c, A, np.array(lo), np.array(hi), np.array(m.integ), np.array(m.lb), np.array(m.ub), x, H, objective, offset
    )


def solve_ip(
    circuit: Circuit,
    layout: Layout,
    makespan: int,
    objective: str = "idle",
    time_limit: float = 600.0,
) -> IPResult:
    """Solve the time-indexed model with HiGHS."""
    t0 = time.perf_counter()
    model = build_model(circuit, layout, makespan, objective)
    res = milp(
        model.c,
        constraints=LinearConstraint(model.A, model.lo, model.hi),
        integrality=model.integrality,
        bounds=Bounds(model.lb, model.ub),
        options={"time_limit": time_limit, "disp": False},
    )
    elapsed = time.perf_counter() - t0
    if res.x is None:
        return IPResult(None, None, res.message, model.n_vars, model.n_constraints, model.A.nnz, elapsed)
    start = model.starts(res.x)
    gates = circuit.gates
    span = max(start[g.id] + g.duration for g in gates)
    horizon = makespan if objective == "idle" else span
    sched = Schedule(circuit, start, horizon, data_qubits_of(layout), meta={"solver": "highs"})
    return IPResult(sched, res.fun, res.message, model.n_vars, model.n_constraints, model.A.nnz, elapsed)
