import pytest
from conftest import brute_force, brute_min_idle, brute_min_makespan, random_instance

from bs9arch.circuits import Circuit, Gate
from bs9arch.greedy import hand_schedule, list_schedule, upper_bound
from bs9arch.ip import solve_ip
from bs9arch.model import GateKind
from bs9arch.schedule import (
    DISJOINT,
    SAME_START,
    Schedule,
    controller_signal,
    data_qubits_of,
    pair_relations,
    validate_schedule,
)
from bs9arch.sim.settings import stored_schedule
from bs9arch.solver import (
    SchedulingError,
    makespan_lower_bound,
    minimize_idle,
    minimize_makespan,
    solver_stats,
)

SEEDS = range(60)


# ---------------------------------------------------------------------------
# brute-force equivalence on small instances


@pytest.fixture(scope="module")
def oracle():
    """[DERIVED] optimum makespan and idle per instance, by enumeration."""
    out = {}
    for seed in SEEDS:
        circuit, layout = random_instance(seed)
        H = brute_min_makespan(circuit, layout)
        out[seed] = (circuit, layout, H, brute_min_idle(circuit, layout, H))
    return out


@pytest.mark.parametrize("engine", ["cpsat", "bnb"])
@pytest.mark.parametrize("seed", SEEDS)
def test_small_instances_match_brute_force(oracle, engine, seed):
    circuit, layout, H, idle = oracle[seed]
    ms = minimize_makespan(circuit, layout, engine=engine)
    assert ms.makespan == H
    assert validate_schedule(ms.schedule, circuit, layout) == []
    res = minimize_idle(circuit, layout, H, engine=engine)
    assert res.report.total == idle
    assert validate_schedule(res.schedule, circuit, layout) == []


@pytest.mark.parametrize("seed", range(0, 60, 6))
def test_small_instances_match_integer_program(oracle, seed):
    circuit, layout, H, idle = oracle[seed]
    ip = solve_ip(circuit, layout, H, "idle", time_limit=60)
    assert ip.schedule is not None
    assert ip.schedule.idle_report().total == idle


@pytest.mark.parametrize("seed", SEEDS[:20])
def test_pair_relations_agree_with_validator(seed):
    # two-gate schedules are legal exactly when the pairwise relation allows
    circuit, layout = random_instance(seed)
    rel = pair_relations(circuit, layout)
    gates = circuit.gates
    for a in gates:
        for b in gates:
            if a.id >= b.id:
                continue
            pair = (Gate(0, a.kind, a.qubits), Gate(1, b.kind, b.qubits))
            orders = {}
            for q in circuit.qubits:
                on = tuple(g.id for g in pair if q in g.qubits)
                if on:
                    orders[q] = ((on,),)
            sub = Circuit(circuit.qubits, pair, orders)
            r = rel.get((a.id, b.id))
            for sa in range(4):
                for sb in range(4):
                    s = Schedule(sub, {0: sa, 1: sb}, 12, data_qubits_of(layout))
                    ok = not [v for v in validate_schedule(s, sub, layout) if v.constraint != "precedence"]
                    overlap = sa < sb + b.duration and sb < sa + a.duration
                    allowed = not overlap or r is None or (r == SAME_START and sa == sb)
                    assert ok == allowed, (a, b, sa, sb, r)


# ---------------------------------------------------------------------------
# the BS9 round


def test_stored_optimum_is_clean_and_beats_hand(bs9, layout):
    sched = stored_schedule("native")
    assert validate_schedule(sched, sched.circuit, layout) == []
    # [PAPER] 95 idle ticks, hand baseline 129
    assert sched.idle_report().total == 95
    hand = hand_schedule(bs9, layout)
    assert validate_schedule(hand, bs9, layout) == []
    assert hand.idle_report().total == 129
    assert hand.makespan == 33


def test_greedy_bounds_are_legal(bs9, layout):
    ls = list_schedule(bs9, layout)
    assert validate_schedule(ls, bs9, layout) == []
    assert upper_bound(bs9, layout) <= ls.makespan
    assert makespan_lower_bound(bs9) <= upper_bound(bs9, layout)


@pytest.mark.slow
def test_solver_reaches_95_idle(bs9, layout):
    # [DERIVED] optimum over all makespans: (28, 118), (29, 95), (30, 102)
    res = minimize_idle(bs9, layout, 28, sweep=True, engine="cpsat")
    assert res.report.total == 95
    assert res.schedule.makespan == 29
    assert validate_schedule(res.schedule, bs9, layout) == []


def test_min_makespan_is_28(bs9, layout):
    assert minimize_makespan(bs9, layout, engine="cpsat").makespan == 28


def test_validator_reports_broken_precedence(layout):
    sched = stored_schedule("native")
    start = dict(sched.start)
    circuit = sched.circuit
    prep = next(g for g in circuit.gates if g.kind is GateKind.PREP_ONE)
    meas = next(g for g in circuit.gates if g.kind is GateKind.MEASURE_Z and g.qubits == prep.qubits)
    start[prep.id], start[meas.id] = start[meas.id], start[prep.id]
    bad = Schedule(circuit, start, sched.makespan, sched.data_qubits)
    rules = {v.constraint for v in validate_schedule(bad, circuit, layout)}
    assert "precedence" in rules


def test_validator_reports_horizon(layout):
    sched = stored_schedule("native")
    bad = Schedule(sched.circuit, sched.start, sched.makespan - 1, sched.data_qubits)
    assert any(v.constraint == "horizon" for v in validate_schedule(bad, sched.circuit, layout))


def test_controller_signals_are_exported(layout):
    sched = stored_schedule("native")
    doc = sched.to_dict(layout)
    assert len(doc["ticks"]) == sched.makespan
    assert set(doc["ticks"][0]["blocks"]) == {b.id for b in layout.blocks}
    assert controller_signal(sched, layout, layout.blocks[0].id, 0)


def test_gantt_has_one_row_per_qubit(layout):
    sched = stored_schedule("native")
    lines = sched.gantt().splitlines()
    assert len(lines) == 1 + len(sched.circuit.qubits)


def test_impossible_bound_raises(bs9, layout):
    with pytest.raises(SchedulingError):
        minimize_makespan(bs9, layout, 20, engine="cpsat")


def test_solver_stats_record(bs9, layout):
    circuit, layout_small = random_instance(3)
    res = minimize_makespan(circuit, layout_small, engine="bnb")
    rec = solver_stats(res)
    assert rec["objective"] == "makespan" and rec["value"] == res.makespan
    with pytest.raises(TypeError):
        solver_stats(object())


def test_disjoint_for_shared_qubit():
    circuit, layout = random_instance(5)
    rel = pair_relations(circuit, layout)
    for q in circuit.qubits:
        ids = [g.id for g in circuit.gates_on(q)]
        for i, a in enumerate(ids):
            for b in ids[i + 1 :]:
                assert rel[min(a, b), max(a, b)] == DISJOINT


def test_brute_force_enumerates_only_legal():
    circuit, layout = random_instance(1)
    H = brute_min_makespan(circuit, layout)
    for s in brute_force(circuit, layout, H):
        assert validate_schedule(s, circuit, layout) == []
