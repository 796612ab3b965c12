import itertools
import random

import pytest

from bs9arch.circuits import Circuit, Gate, build_bs9_extraction
from bs9arch.model import ControllerBlock, Coupling, GateKind, Layout, Qubit, Role, Side, default_layout
from bs9arch.schedule import Schedule, data_qubits_of, validate_schedule


@pytest.fixture(scope="session")
def layout():
    return default_layout()


@pytest.fixture(scope="session")
def bs9(layout):
    return build_bs9_extraction(layout)


# ---------------------------------------------------------------------------
# small random instances for brute-force checks

_SMALL_KINDS = (
    GateKind.PREP_ONE,
    GateKind.MEASURE_Z,
    GateKind.PHASE_HALF,
    GateKind.PHASE_FULL,
    GateKind.X_HALF,
    GateKind.CPHASE,
)


def random_instance(seed: int, max_qubits: int = 4, max_gates: int = 4):
    """A layout of at most 4 qubits on a 2x2 patch and a short circuit."""
    rng = random.Random(seed)
    n = rng.randint(2, max_qubits)
    cells = [(0, 0), (0, 1), (1, 0), (1, 1)][:n]
    roles = [Role.DATA] + [rng.choice(list(Role)) for _ in range(n - 1)]
    qubits = tuple(Qubit(f"q{i}", roles[i], r, c) for i, (r, c) in enumerate(cells))
    couplings = []
    for a, b in itertools.combinations(qubits, 2):
        if abs(a.row - b.row) + abs(a.col - b.col) == 1:
            couplings.append(Coupling(a.id, b.id, rng.choice(list(Side))))
    ids = [q.id for q in qubits]
    rng.shuffle(ids)
    blocks, i = [], 0
    while i < n:
        k = rng.randint(1, min(3, n - i))
        blocks.append(ControllerBlock(f"b{len(blocks)}", tuple(ids[i : i + k])))
        i += k
    layout = Layout(qubits, tuple(blocks), tuple(couplings))

    gates = []
    for _ in range(rng.randint(2, max_gates)):
        kind = rng.choice(_SMALL_KINDS)
        if kind is GateKind.CPHASE and couplings:
            c = rng.choice(couplings)
            qs = (c.a, c.b)
        else:
            kind = GateKind.PHASE_HALF if kind is GateKind.CPHASE else kind
            qs = (rng.choice(qubits).id,)
        gates.append(Gate(len(gates), kind, qs, f"g{len(gates)}"))
    orders = {}
    for q in qubits:
        on = [g.id for g in gates if q.id in g.qubits]
        if not on:
            continue
        chain = [(g,) for g in on]
        # sometimes let two neighbours commute
        if len(chain) >= 2 and rng.random() < 0.3:
            j = rng.randrange(len(chain) - 1)
            chain[j : j + 2] = [chain[j] + chain[j + 1]]
        orders[q.id] = (tuple(chain),)
    circuit = Circuit(tuple(q.id for q in qubits), tuple(gates), orders)
    return circuit, layout


def brute_force(circuit: Circuit, layout: Layout, horizon: int):
    """Every legal start assignment within ``horizon``, by enumeration."""
    gates = circuit.gates
    ranges = [range(0, horizon - g.duration + 1) for g in gates]
    data = data_qubits_of(layout)
    for starts in itertools.product(*ranges):
        s = Schedule(circuit, dict(enumerate(starts)), horizon, data)
        if not validate_schedule(s, circuit, layout):
            yield s


def brute_min_makespan(circuit, layout, limit: int = 16) -> int:
    lo = max(sum(g.duration for g in circuit.gates_on(q)) for q in circuit.qubits if circuit.gates_on(q))
    for H in range(lo, limit + 1):
        if next(brute_force(circuit, layout, H), None) is not None:
            return H
    raise AssertionError("no schedule within the brute-force limit")


def brute_min_idle(circuit, layout, horizon: int) -> int:
    return min(s.idle_report().total for s in brute_force(circuit, layout, horizon))


# ---------------------------------------------------------------------------
# acceptance verdicts, printed once at the end of the run

VERDICTS: dict[int, str] = {}


def record_verdict(n: int, ok: bool, detail: str) -> None:
    VERDICTS[n] = f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}"
    print(VERDICTS[n])


def pytest_terminal_summary(terminalreporter):
    if VERDICTS:
        terminalreporter.section("acceptance criteria")
        for n in sorted(VERDICTS):
            terminalreporter.write_line(VERDICTS[n])
