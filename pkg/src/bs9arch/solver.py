"""Exact schedule optimisation at tick granularity.

Two engines share one constraint model: the per-qubit gate orders of the
circuit plus the pairwise controller relations of
:func:`schedule.pair_relations` (gates that may never overlap, or may
overlap only when started on the same tick).

``"cpsat"``
    OR-Tools CP-SAT on the disjunctive form of that model.  Fast enough to
    prove optimality on the full extraction round.
``"bnb"``
    A self-contained branch and bound over start-tick domains stored as
    integer bitsets.  Gates are fixed in order of earliest possible start
    (ties: lowest qubit, then lowest gate id); one branch starts the gate
    at that tick, the other forbids the tick.  Domains are propagated
    through the precedence edges of the chosen ordering alternative, the
    compulsory parts of related gates and a per-qubit capacity check.
    Exact, and practical for small instances.

A time-indexed integer program in :mod:`bs9arch.ip` is a third,
independently formulated route used for cross-checks.
"""

from __future__ import annotations

import importlib.util
import time
from dataclasses import dataclass, field

from .circuits import Circuit
from .model import Layout
from .schedule import (
    SAME_START,
    IdleReport,
    Schedule,
    data_qubits_of,
    pair_relations,
)


class SchedulingError(RuntimeError):
    pass


@dataclass
class SolverStats:
    """Size and effort of one solve."""

    objective: str
    horizon: int
    variables: int
    nodes: int
    seconds: float
    proved_optimal: bool
    value: int | None
    reference: dict = field(
        default_factory=lambda: {"binary_variables": 4701, "constraints": 5784, "nonzeros": 58163}
    )

    def to_dict(self) -> dict:
        return {
            "objective": self.objective,
            "horizon": self.horizon,
            "variables": self.variables,
            "nodes": self.nodes,
            "seconds": round(self.seconds, 6),
            "proved_optimal": self.proved_optimal,
            "value": self.value,
            "reference": dict(self.reference),
        }


def _lowbit(x: int) -> int:
    return (x & -x).bit_length() - 1


class _Search:
    def __init__(self, circuit: Circuit, layout: Layout, horizon: int, node_limit: int | None, deadline: float | None):
        self.c = circuit
        self.H = horizon
        self.node_limit = node_limit
        self.deadline = deadline
        self.nodes = 0
        gates = circuit.gates
        self.n = len(gates)
        self.dur = [g.duration for g in gates]
        qindex = {q: i for i, q in enumerate(circuit.qubits)}
        self.order_key = [(min(qindex[q] for q in g.qubits), g.id) for g in gates]
        self.gq = [tuple(qindex[q] for q in g.qubits) for g in gates]
        self.on_q = [[g.id for g in circuit.gates_on(q)] for q in circuit.qubits]

        # precedence edges with an optional condition (qubit index, alternative)
        self.out_e: list[list[tuple[int, tuple[int, int] | None]]] = [[] for _ in gates]
        self.in_e: list[list[tuple[int, tuple[int, int] | None]]] = [[] for _ in gates]
        self.alt_count = [1] * len(circuit.qubits)
        for q, alts in circuit.orders.items():
            qi = qindex[q]
            self.alt_count[qi] = len(alts)
            per_alt = []
            for chain in alts:
                es = set()
                for prev, nxt in zip(chain, chain[1:]):
                    es.update((a, b) for a in prev for b in nxt)
                per_alt.append(es)
            common = set.intersection(*per_alt)
            for a, b in common:
                self.out_e[a].append((b, None))
                self.in_e[b].append((a, None))
            if len(alts) > 1:
                for k, es in enumerate(per_alt):
                    for a, b in es - common:
                        self.out_e[a].append((b, (qi, k)))
                        self.in_e[b].append((a, (qi, k)))

        self.rel: list[list[tuple[int, int]]] = [[] for _ in gates]
        for (a, b), r in pair_relations(circuit, layout).items():
            self.rel[a].append((b, r))
            self.rel[b].append((a, r))

        data = data_qubits_of(layout)
        self.anc_pairs = []
        for q, alts in circuit.orders.items():
            if q in data:
                continue
            chain = alts[0]
            self.anc_pairs.append((chain[0][0], chain[-1][0]))
        self.min_span = [
            sum(gates[g].duration for seg in alts[0] for g in seg) - gates[alts[0][-1][0]].duration
            for q, alts in circuit.orders.items()
            if q not in data
        ]

    # ---- domains
    def initial(self):
        doms = [(1 << (self.H - d + 1)) - 1 if self.H >= d else 0 for d in self.dur]
        choice = [None if k > 1 else 0 for k in self.alt_count]
        return doms, choice

    def _active(self, cond, choice) -> bool:
        return cond is None or choice[cond[0]] == cond[1]

    def propagate(self, doms: list[int], choice: list, queue: list[int], fixed: list[bool]) -> bool:
        dur = self.dur
        pending = set(queue)
        while pending:
            g = pending.pop()
            dg = doms[g]
            if not dg:
                return False
            est = _lowbit(dg)
            lst = dg.bit_length() - 1
            if not fixed[g] and est == lst:
                fixed[g] = True
            if lst < est + dur[g]:
                # compulsory part [lst, est + dur) is occupied whatever the start
                for h, r in self.rel[g]:
                    lo = max(0, lst - dur[h] + 1)
                    mask = ((1 << (est + dur[g])) - 1) ^ ((1 << lo) - 1)
                    if r == SAME_START:
                        mask &= ~dg
                    nd = doms[h] & ~mask
                    if nd != doms[h]:
                        if not nd:
                            return False
                        doms[h] = nd
                        pending.add(h)
            for b, cond in self.out_e[g]:
                if not self._active(cond, choice):
                    continue
                lo = est + dur[g]
                nd = doms[b] & ~((1 << lo) - 1)
                if nd != doms[b]:
                    if not nd:
                        return False
                    doms[b] = nd
                    pending.add(b)
            for a, cond in self.in_e[g]:
                if not self._active(cond, choice):
                    continue
                hi = lst - dur[a]
                if hi < 0:
                    return False
                nd = doms[a] & ((1 << (hi + 1)) - 1)
                if nd != doms[a]:
                    if not nd:
                        return False
                    doms[a] = nd
                    pending.add(a)
        return self.capacity_ok(doms, fixed)

    def capacity_ok(self, doms, fixed) -> bool:
        dur = self.dur
        for ids in self.on_q:
            need = 0
            lo, hi = self.H, 0
            for g in ids:
                if fixed[g]:
                    continue
                need += dur[g]
                d = doms[g]
                lo = min(lo, _lowbit(d))
                hi = max(hi, d.bit_length() - 1 + dur[g])
            if not need:
                continue
            busy = 0
            for g in ids:
                if fixed[g]:
                    s = doms[g].bit_length() - 1
                    busy += max(0, min(hi, s + dur[g]) - max(lo, s))
            if hi - lo - busy < need:
                return False
        return True

    def idle_bound(self, doms) -> int:
        total = 0
        for (p, m), span in zip(self.anc_pairs, self.min_span):
            total += max(span, _lowbit(doms[m]) - (doms[p].bit_length() - 1))
        return total

    def idle_value(self, doms) -> int:
        return sum((doms[m].bit_length() - 1) - (doms[p].bit_length() - 1) for p, m in self.anc_pairs)

    # ---- search
    def _out_of_budget(self) -> bool:
        if self.node_limit is not None and self.nodes >= self.node_limit:
            return True
        return self.deadline is not None and time.perf_counter() > self.deadline

    def run(self, objective: str, incumbent: int | None = None):
        """Depth-first search.  Returns (best doms, best value, complete)."""
        doms, choice = self.initial()
        fixed = [False] * self.n
        if not all(doms) or not self.propagate(doms, choice, list(range(self.n)), fixed):
            self.nodes = 1
            return None, None, True
        best = [None, incumbent]
        complete = [True]

        def dfs(doms, choice, fixed):
            self.nodes += 1
            if self._out_of_budget():
                complete[0] = False
                return
            if objective == "idle" and best[1] is not None:
                lb = self.idle_bound(doms)
                if lb > best[1] or (lb == best[1] and best[0] is not None):
                    return
            g = -1
            key = None
            for i in range(self.n):
                if fixed[i]:
                    continue
                k = (_lowbit(doms[i]),) + self.order_key[i]
                if key is None or k < key:
                    key, g = k, i
            if g < 0:
                value = self.idle_value(doms) if objective == "idle" else 0
                if best[1] is None or value < best[1] or best[0] is None and value <= best[1]:
                    best[0], best[1] = list(doms), value
                return
            undecided = [qi for qi in self.gq[g] if choice[qi] is None]
            if undecided:
                qi = undecided[0]
                for k in range(self.alt_count[qi]):
                    nc = list(choice)
                    nc[qi] = k
                    nd, nf = list(doms), list(fixed)
                    touched = [a for a in range(self.n) if any(c == (qi, k) for _, c in self.out_e[a])]
                    if self.propagate(nd, nc, touched, nf):
                        dfs(nd, nc, nf)
                    if objective == "makespan" and best[0] is not None:
                        return
                return
            s = key[0]
            nd, nf = list(doms), list(fixed)
            nd[g] = 1 << s
            if self.propagate(nd, choice, [g], nf):
                dfs(nd, choice, nf)
            if objective == "makespan" and best[0] is not None:
                return
            nd, nf = list(doms), list(fixed)
            nd[g] &= ~(1 << s)
            if nd[g] and self.propagate(nd, choice, [g], nf):
                dfs(nd, choice, nf)

        dfs(doms, choice, fixed)
        return best[0], best[1], complete[0]

    def variables(self) -> int:
        return sum(max(0, self.H - d + 1) for d in self.dur) + sum(k for k in self.alt_count if k > 1)

    def to_schedule(self, doms, data) -> Schedule:
        start = {g: doms[g].bit_length() - 1 for g in range(self.n)}
        return Schedule(self.c, start, self.H, data)


def _cpsat_solve(
    circuit: Circuit,
    layout: Layout,
    horizon: int,
    objective: str,
    time_limit: float | None,
    workers: int,
    idle_cap: int | None = None,
):
    """Solve the pairwise disjunctive model with OR-Tools CP-SAT.

    ``idle_cap`` bounds the total ancilla idle.  Returns ``(start map or
    None, proved, branches)``.  A second,
    single-threaded pass with the optimum fixed minimises the sum of start
    ticks, which makes the returned schedule reproducible.
    """
    from ortools.sat.python import cp_model

    gates = circuit.gates
    data = data_qubits_of(layout)

    def build():
        m = cp_model.CpModel()
        st = [m.NewIntVar(0, max(0, horizon - g.duration), f"s{g.id}") for g in gates]
        for (a, b), r in sorted(pair_relations(circuit, layout).items()):
            da, db = gates[a].duration, gates[b].duration
            before, after = m.NewBoolVar(""), m.NewBoolVar("")
            m.Add(st[a] + da <= st[b]).OnlyEnforceIf(before)
            m.Add(st[b] + db <= st[a]).OnlyEnforceIf(after)
            lits = [before, after]
            if r == SAME_START:
                same = m.NewBoolVar("")
                m.Add(st[a] == st[b]).OnlyEnforceIf(same)
                lits.append(same)
            m.AddBoolOr(lits)
        for q, alts in circuit.orders.items():
            ys = [m.NewBoolVar("") for _ in alts]
            m.AddExactlyOne(ys)
            for y, chain in zip(ys, alts):
                for prev, nxt in zip(chain, chain[1:]):
                    for a in prev:
                        for b in nxt:
                            m.Add(st[b] >= st[a] + gates[a].duration).OnlyEnforceIf(y)
        spans = sum(
            st[alts[0][-1][0]] - st[alts[0][0][0]] for q, alts in circuit.orders.items() if q not in data
        )
        if idle_cap is not None:
            m.Add(spans <= _min_spans(circuit, data) + idle_cap)
            # redundant per-ancilla bound; the sum alone propagates weakly
            for q, alts in circuit.orders.items():
                if q not in data:
                    first, last = alts[0][0][0], alts[0][-1][0]
                    m.Add(st[last] - st[first] <= _min_span(circuit, alts[0]) + idle_cap)
        if objective == "makespan":
            expr = m.NewIntVar(0, horizon, "cmax")
            for g in gates:
                m.Add(expr >= st[g.id] + g.duration)
        else:
            expr = spans
        return m, st, expr

    if any(g.duration > horizon for g in gates):
        return None, True, 0
    m, st, expr = build()
    m.Minimize(expr)
    solver = cp_model.CpSolver()
    solver.parameters.num_workers = workers
    solver.parameters.random_seed = 0
    if time_limit is not None:
        solver.parameters.max_time_in_seconds = time_limit
    status = solver.Solve(m)
    branches = solver.NumBranches()
    if status == cp_model.INFEASIBLE:
        return None, True, branches
    if status not in (cp_model.OPTIMAL, cp_model.FEASIBLE):
        return None, False, branches
    proved = status == cp_model.OPTIMAL
    best = round(solver.ObjectiveValue())

    m, st, expr = build()
    m.Add(expr == best)
    m.Minimize(sum(st))
    canon = cp_model.CpSolver()
    canon.parameters.num_workers = 1
    canon.parameters.random_seed = 0
    canon.parameters.max_deterministic_time = 60.0
    status2 = canon.Solve(m)
    branches += canon.NumBranches()
    if status2 in (cp_model.OPTIMAL, cp_model.FEASIBLE):
        return {g.id: canon.Value(st[g.id]) for g in gates}, proved, branches
    return {g.id: solver.Value(st[g.id]) for g in gates}, proved, branches


def _min_span(circuit: Circuit, chain) -> int:
    """Prep-to-measure span of one ancilla chain run without idling."""
    return sum(circuit.gates[g].duration for seg in chain for g in seg) - circuit.gates[chain[-1][0]].duration


def _min_spans(circuit: Circuit, data) -> int:
    """Summed prep-to-measure spans of idle-free ancillas."""
    return sum(_min_span(circuit, alts[0]) for q, alts in circuit.orders.items() if q not in data)


def default_engine() -> str:
    return "cpsat" if importlib.util.find_spec("ortools") is not None else "bnb"


def _solve(circuit, layout, horizon, objective, engine, node_limit, time_limit, workers, idle_cap=None):
    """One solve at a fixed horizon: (start map or None, proved, nodes, variables)."""
    engine = default_engine() if engine == "auto" else engine
    search = _Search(circuit, layout, horizon, node_limit, None)
    nvars = search.variables()
    if engine == "cpsat":
        start, proved, nodes = _cpsat_solve(circuit, layout, horizon, objective, time_limit, workers, idle_cap)
        return start, proved, nodes, nvars
    if idle_cap is not None:
        raise ValueError("an ancilla idle cap needs the cpsat engine")
    if engine == "bnb":
        if time_limit is not None:
            search.deadline = time.perf_counter() + time_limit
        doms, _, complete = search.run(objective)
        start = None if doms is None else {g: doms[g].bit_length() - 1 for g in range(search.n)}
        return start, complete, search.nodes, nvars
    raise ValueError(f"unknown engine {engine!r}")


def makespan_lower_bound(circuit: Circuit) -> int:
    """Largest per-qubit busy time; every qubit runs its gates serially."""
    best = 1 if circuit.gates else 0
    for q in circuit.qubits:
        best = max(best, sum(g.duration for g in circuit.gates_on(q)))
    return best


@dataclass
class MakespanResult:
    makespan: int
    schedule: Schedule
    stats: SolverStats


@dataclass
class IdleResult:
    schedule: Schedule
    report: IdleReport
    stats: SolverStats
    sweep: list[tuple[int, int]] = field(default_factory=list)


def minimize_makespan(
    circuit: Circuit,
    layout: Layout,
    upper_bound: int | None = None,
    *,
    engine: str = "auto",
    node_limit: int | None = None,
    time_limit: float | None = None,
    workers: int = 8,
    ancilla_idle_cap: int | None = None,
) -> MakespanResult:
    """Smallest horizon admitting a legal schedule.

    The makespan is minimised inside a model of horizon ``upper_bound``;
    the branch-and-bound engine instead tries horizons from a lower bound
    upwards, so its first feasible horizon is optimal.  Without an
    explicit bound the better phase schedule of :mod:`bs9arch.greedy`
    supplies one.  ``ancilla_idle_cap`` restricts the search to schedules
    whose ancillas idle at most that many ticks in total (CP-SAT only).
    """
    t0 = time.perf_counter()
    if upper_bound is None:
        from .greedy import upper_bound as greedy_bound

        upper_bound = greedy_bound(circuit, layout)
    data = data_qubits_of(layout)
    eng = default_engine() if engine == "auto" else engine
    if eng == "cpsat":
        start, proved, nodes, nvars = _solve(
            circuit, layout, upper_bound, "makespan", eng, node_limit, time_limit, workers, ancilla_idle_cap
        )
        if start is None:
            if proved:
                raise SchedulingError(f"no legal schedule within {upper_bound} ticks; raise the upper bound")
            raise SchedulingError(f"search budget exhausted below {upper_bound} ticks")
        H = max((start[g.id] + g.duration for g in circuit.gates), default=0)
        start, _, more, nvars = _solve(
            circuit, layout, H, "makespan", eng, node_limit, time_limit, workers, ancilla_idle_cap
        )
        nodes += more
    else:
        nodes, proved = 0, True
        if ancilla_idle_cap is not None:
            raise ValueError("an ancilla idle cap needs the cpsat engine")
        for H in range(makespan_lower_bound(circuit), upper_bound + 1):
            start, complete, n, nvars = _solve(circuit, layout, H, "makespan", eng, node_limit, time_limit, workers)
            nodes += n
            if start is not None:
                break
            if not complete:
                raise SchedulingError(f"search budget exhausted at horizon {H}; no schedule found")
        else:
            raise SchedulingError(f"no legal schedule within {upper_bound} ticks; raise the upper bound")
    sched = Schedule(circuit, start, H, data, meta={"solver": eng, "objective": "makespan"})
    stats = SolverStats("makespan", H, nvars, nodes, time.perf_counter() - t0, proved, H)
    return MakespanResult(H, sched, stats)


def minimize_idle(
    circuit: Circuit,
    layout: Layout,
    makespan: int,
    *,
    sweep: bool = False,
    engine: str = "auto",
    node_limit: int | None = None,
    time_limit: float | None = None,
    workers: int = 8,
) -> IdleResult:
    """Schedule of least total idle at ``makespan``.

    Data idle is fixed by the makespan, so the solver minimises the summed
    preparation-to-measurement spans of the ancillas.  With ``sweep`` the
    makespan is raised one tick at a time until the data idle alone, which
    grows by one tick per data qubit per extra makespan tick, can no longer
    beat the best total seen; the best schedule over the sweep is then
    optimal over all makespans.
    """
    t0 = time.perf_counter()
    data = data_qubits_of(layout)
    busy = {q: sum(g.duration for g in circuit.gates_on(q)) for q in data}
    eng = default_engine() if engine == "auto" else engine
    best = None
    trace: list[tuple[int, int]] = []
    nodes = 0
    proved_all = True
    H = makespan
    while True:
        start, proved, n, nvars = _solve(circuit, layout, H, "idle", eng, node_limit, time_limit, workers)
        nodes += n
        if start is None:
            if H == makespan:
                if proved:
                    raise SchedulingError(f"no legal schedule with makespan {makespan}")
                raise SchedulingError(f"search budget exhausted at makespan {makespan}")
        else:
            proved_all &= proved
            sched = Schedule(circuit, start, H, data, meta={"solver": eng, "objective": "idle"})
            total = sched.idle_report().total
            trace.append((H, total))
            if best is None or total < best[1].total:
                best = (sched, sched.idle_report(), nvars)
        if not sweep:
            break
        H += 1
        data_floor = sum(H - b for b in busy.values())
        if best is not None and data_floor >= best[1].total:
            trace.append((H, data_floor))
            break
    sched, report, nvars = best
    stats = SolverStats("idle", sched.makespan, nvars, nodes, time.perf_counter() - t0, proved_all, report.total)
    sched.meta["sweep"] = [list(t) for t in trace]
    return IdleResult(sched, report, stats, trace)


def solver_stats(run) -> dict:
    """Statistics record of a finished solve."""
    if isinstance(run, SolverStats):
        return run.to_dict()
    stats = getattr(run, "stats", None)
    if isinstance(stats, SolverStats):
        return stats.to_dict()
    raise TypeError("run carries no solver statistics")
