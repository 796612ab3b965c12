"""Flat, array-encoded programs for Pauli-frame simulation.

A :class:`Program` describes one error-correction *cycle* of a memory
experiment: a sequence of operations on integer qubit indices, each with
an opcode, up to two targets, a measurement-record slot and a noise class.
Builders translate the three settings into this form:

* ``native``: the scheduled extraction over the device gate set,
  including every idle tick of the schedule;
* ``steane``: the encoded-ancilla extraction over the nonlocal basis;
* ``blackbox``: one depolarizing step per data qubit followed by ideal
  gauge readout with independent outcome flips.

Programs are consumed by the trial kernels (compiled or pure Python),
which therefore never see gate names, layouts or schedules.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..circuits import NonlocalKind, build_steane_extraction, steane_start_times
from ..model import GateKind, Layout, NoiseTable, Role
from ..schedule import Schedule

# opcodes
PREP_Z = 0  # reset; a fault flips the prepared bit
PREP_X = 1  # reset; a fault flips the prepared phase
MEAS_Z = 2
MEAS_X = 3
PHASE_HALF = 4  # X -> Y
X_HALF = 5  # Z -> Y
PAULI = 6  # Pauli gate or idle: frame unchanged
CZ = 7
CNOT = 8
CHECK_ZZ = 9  # ideal ZZ readout of the data frame
CHECK_XX = 10

OPCODE_NAMES = (
    "prep_z",
    "prep_x",
    "meas_z",
    "meas_x",
    "phase_half",
    "x_half",
    "pauli",
    "cz",
    "cnot",
    "check_zz",
    "check_xx",
)

# number of distinct faults a location can suffer
N_CHOICES = np.array([1, 1, 1, 1, 3, 3, 3, 15, 15, 1, 1], dtype=np.int32)
TWO_QUBIT = frozenset({CZ, CNOT, CHECK_ZZ, CHECK_XX})

_NATIVE_OPCODE = {
    GateKind.PREP_ONE: PREP_Z,
    GateKind.MEASURE_Z: MEAS_Z,
    GateKind.PHASE_HALF: PHASE_HALF,
    GateKind.PHASE_FULL: PAULI,
    GateKind.X_HALF: X_HALF,
    GateKind.X_FULL: PAULI,
    GateKind.CPHASE: CZ,
    GateKind.IDLE: PAULI,
    GateKind.BARE_IDLE: PAULI,
}

_NONLOCAL_OPCODE = {
    NonlocalKind.PREP_ZERO: PREP_Z,
    NonlocalKind.PREP_ONE: PREP_Z,
    NonlocalKind.PREP_PLUS: PREP_X,
    NonlocalKind.CNOT: CNOT,
    NonlocalKind.MEASURE_Z: MEAS_Z,
    NonlocalKind.MEASURE_X: MEAS_X,
}

SETTINGS = ("native", "steane", "blackbox")


@dataclass
class Program:
    """One noisy EC cycle plus the code data needed to decode it.

    ``ops`` has one row ``(opcode, q0, q1, rec)`` per operation; ``q1`` and
    ``rec`` are ``-1`` when unused.  ``op_class`` indexes ``class_probs``
    (``-1`` marks a noiseless operation).  The syndrome of round ``r`` is
    read from records through the CSR pair ``stab_ptr``/``stab_idx``: bits
    ``4r .. 4r+3`` are the two Z-type then the two X-type stabilizers.
    ``corr_x[s]`` is the qubit that receives an X correction for Z-type
    syndrome ``s = s0 | s1 << 1`` (``-1`` for none); ``corr_z`` likewise.
    ``zstab``/``xstab`` list, per stabilizer, the data qubits whose X (Z)
    frame bits it reads; they drive the ideal closing round.  ``fail_x``
    is the support of the bare ``Z_L`` (a column), ``fail_z`` that of
    ``X_L`` (a row).
    """

    qubits: tuple[str, ...]
    ops: np.ndarray
    op_class: np.ndarray
    class_probs: np.ndarray
    rounds: int
    n_rec: int
    stab_ptr: np.ndarray
    stab_idx: np.ndarray
    corr_x: np.ndarray
    corr_z: np.ndarray
    zstab: np.ndarray
    xstab: np.ndarray
    fail_x: np.ndarray
    fail_z: np.ndarray
    data: np.ndarray
    meta: dict = field(default_factory=dict)

    @property
    def n_qubits(self) -> int:
        return len(self.qubits)

    @property
    def n_ops(self) -> int:
        return len(self.ops)

    def expected_faults(self) -> float:
        """Mean number of faults injected per cycle."""
        cls = self.op_class[self.op_class >= 0]
        return float(self.class_probs[cls].sum())

    def class_locations(self) -> list[np.ndarray]:
        """Operation indices belonging to each noise class."""
        return [np.flatnonzero(self.op_class == k).astype(np.int64) for k in range(len(self.class_probs))]

    def with_probs(self, probs) -> "Program":
        probs = np.asarray(probs, dtype=np.float64)
        if probs.shape != self.class_probs.shape:
            raise ValueError("class count mismatch")
        return _replace(self, class_probs=probs)

    def noiseless(self) -> "Program":
        return self.with_probs(np.zeros_like(self.class_probs))


def _replace(prog: Program, **kw) -> Program:
    from dataclasses import replace

    return replace(prog, **kw)


class _Assembler:
    """Collects operations and interns noise classes by probability."""

    def __init__(self, qubits) -> None:
        self.qubits = tuple(qubits)
        self.index = {q: i for i, q in enumerate(self.qubits)}
        self.rows: list[tuple[int, int, int, int]] = []
        self.cls: list[int] = []
        self.probs: list[float] = []
        self.labels: list[str] = []
        self._cls_of: dict[str, int] = {}

    def noise_class(self, label: str, prob: float) -> int:
        if not 0.0 <= prob <= 1.0:
            raise ValueError(f"{label} fault probability {prob} outside [0, 1]")
        if prob == 0.0:
            return -1
        if label not in self._cls_of:
            self._cls_of[label] = len(self.probs)
            self.probs.append(float(prob))
            self.labels.append(label)
        return self._cls_of[label]

    def op(self, opcode: int, qs, rec: int = -1, cls: int = -1) -> int:
        q = [self.index[x] for x in qs]
        if len(q) != (2 if opcode in TWO_QUBIT else 1):
            raise ValueError(f"{OPCODE_NAMES[opcode]} takes {2 if opcode in TWO_QUBIT else 1} qubits, got {len(q)}")
        self.rows.append((opcode, q[0], q[1] if len(q) > 1 else -1, rec))
        self.cls.append(cls)
        return len(self.rows) - 1


def _csr(groups: list[list[int]]) -> tuple[np.ndarray, np.ndarray]:
    ptr = np.zeros(len(groups) + 1, dtype=np.int32)
    ptr[1:] = np.cumsum([len(g) for g in groups])
    idx = np.array([i for g in groups for i in g], dtype=np.int32)
    return ptr, idx


def _code_tables(index: dict[str, int], grid: list[list[str]]):
    """Decoder and logical-operator tables for a 3x3 Bacon-Shor patch.

    Z-type syndrome ``(1,0)`` flags column 0, ``(1,1)`` column 1 and
    ``(0,1)`` column 2; the X correction goes on row 0 of that column.
    X-type syndromes flag rows in the same way and the Z correction goes
    on column 0 of that row.
    """
    flagged = {1: 0, 3: 1, 2: 2}
    corr_x = np.full(4, -1, dtype=np.int32)
    corr_z = np.full(4, -1, dtype=np.int32)
    for s, k in flagged.items():
        corr_x[s] = index[grid[0][k]]
        corr_z[s] = index[grid[k][0]]
    zstab = np.array([[index[grid[r][c]] for r in range(3) for c in (k, k + 1)] for k in range(2)], dtype=np.int32)
    xstab = np.array([[index[grid[r][c]] for r in (k, k + 1) for c in range(3)] for k in range(2)], dtype=np.int32)
    fail_x = np.array([index[grid[r][0]] for r in range(3)], dtype=np.int32)
    fail_z = np.array([index[grid[0][c]] for c in range(3)], dtype=np.int32)
    data = np.array([index[q] for row in grid for q in row], dtype=np.int32)
    return corr_x, corr_z, zstab, xstab, fail_x, fail_z, data


def _finish(asm: _Assembler, rounds: int, n_rec: int, stab_groups, grid, meta) -> Program:
    stab_ptr, stab_idx = _csr(stab_groups)
    tables = _code_tables(asm.index, grid)
    return Program(
        asm.qubits,
        np.array(asm.rows, dtype=np.int32).reshape(-1, 4),
        np.array(asm.cls, dtype=np.int32),
        np.array(asm.probs, dtype=np.float64),
        rounds,
        n_rec,
        stab_ptr,
        stab_idx,
        *tables,
        meta={**meta, "classes": list(asm.labels)},
    )


# ---------------------------------------------------------------------------
# native setting


def _bs9_grid(layout: Layout) -> list[list[str]]:
    data = sorted(layout.by_role(Role.DATA), key=lambda q: (q.row, q.col))
    rows = sorted({q.row for q in data})
    cols = sorted({q.col for q in data})
    at = {(q.row, q.col): q.id for q in data}
    return [[at[r, c] for c in cols] for r in rows]


def _gauge_groups(layout: Layout) -> tuple[list[list[str]], list[list[str]]]:
    """Ancillas grouped by the stabilizer their product forms.

    A Z-ancilla between data columns ``k`` and ``k+1`` contributes to Z-type
    stabilizer ``k``; an X-ancilla between data rows ``k`` and ``k+1`` to
    X-type stabilizer ``k``.
    """
    data = layout.by_role(Role.DATA)
    cols = sorted({q.col for q in data})
    rows = sorted({q.row for q in data})
    zs: list[list[str]] = [[], []]
    xs: list[list[str]] = [[], []]
    for a in layout.by_role(Role.Z_ANCILLA):
        k = sum(1 for c in cols if c < a.col) - 1
        zs[k].append(a.id)
    for a in layout.by_role(Role.X_ANCILLA):
        k = sum(1 for r in rows if r < a.row) - 1
        xs[k].append(a.id)
    return zs, xs


def build_native_program(
    schedule: Schedule,
    layout: Layout,
    noise: NoiseTable,
    rounds_per_cycle: int = 2,
) -> Program:
    """Repeat the scheduled extraction ``rounds_per_cycle`` times.

    Every gate fails with its table rate and every idle tick of the
    schedule (data qubits over the whole round, ancillas between
    preparation and measurement) is a location of its own.
    """
    if rounds_per_cycle < 1:
        raise ValueError("rounds_per_cycle must be >= 1")
    if any(isinstance(g.kind, NonlocalKind) for g in schedule.circuit.gates):
        raise ValueError("native programs need a native-gate schedule")
    asm = _Assembler(layout.qubit_ids)
    ancillas = [q.id for q in layout.qubits if q.role is not Role.DATA]
    slot = {a: i for i, a in enumerate(ancillas)}
    n_rec = len(ancillas)
    classes = {k: asm.noise_class(k.value, noise.rate(k)) for k in GateKind}
    timed = schedule.timed_ops()
    for r in range(rounds_per_cycle):
        for _, kind, qs, _gid in timed:
            rec = r * n_rec + slot[qs[0]] if kind is GateKind.MEASURE_Z else -1
            asm.op(_NATIVE_OPCODE[kind], qs, rec, classes[kind])
    zs, xs = _gauge_groups(layout)
    groups = []
    for r in range(rounds_per_cycle):
        for g in zs + xs:
            groups.append([r * n_rec + slot[a] for a in g])
    meta = {
        "setting": "native",
        "rounds_per_cycle": rounds_per_cycle,
        "makespan": schedule.makespan,
        "noise": noise.to_dict(),
    }
    return _finish(asm, rounds_per_cycle, n_rec, groups, _bs9_grid(layout), meta)


# ---------------------------------------------------------------------------
# Steane setting


def build_steane_program(p: float, p_idle: float = 0.0, rounds_per_cycle: int = 2) -> Program:
    """Encoded-ancilla extraction with every nonlocal gate failing at ``p``.

    Ancillas idle on the ticks between their preparation and their
    measurement that carry no gate, each failing with ``p_idle``.  Data
    qubits are busy on both transversal ticks and successive rounds are
    pipelined, so they contribute no idle locations.
    """
    circ = build_steane_extraction()
    start = steane_start_times(circ)
    asm = _Assembler(circ.qubits)
    cls_gate = asm.noise_class("gate", p)
    cls_idle = asm.noise_class("idle", p_idle)
    anc_a = [q for q in circ.qubits if q.startswith("a")]
    anc_b = [q for q in circ.qubits if q.startswith("b")]
    slot = {q: i for i, q in enumerate(anc_a + anc_b)}
    n_rec = len(slot)

    events: list[tuple[int, int, int, tuple[str, ...]]] = []  # (tick, order, opcode, qubits)
    busy: dict[str, set[int]] = {q: set() for q in circ.qubits}
    for g in circ.gates:
        s = start[g.id]
        events.append((s, g.id, _NONLOCAL_OPCODE[g.kind], g.qubits))
        for q in g.qubits:
            busy[q].add(s)
    for q in anc_a + anc_b:
        lo, hi = min(busy[q]), max(busy[q])
        for t in range(lo, hi):
            if t not in busy[q]:
                events.append((t, -1, PAULI, (q,)))
    events.sort(key=lambda e: (e[0], e[1] < 0, e[1], e[3]))

    for r in range(rounds_per_cycle):
        for _, gid, opcode, qs in events:
            rec = r * n_rec + slot[qs[0]] if opcode in (MEAS_Z, MEAS_X) else -1
            asm.op(opcode, qs, rec, cls_idle if gid < 0 else cls_gate)

    def a(r, c):
        return slot[f"a{r}{c}"]

    def b(r, c):
        return slot[f"b{r}{c}"]

    groups = []
    for r in range(rounds_per_cycle):
        off = r * n_rec
        for k in range(2):
            groups.append([off + a(i, c) for i in range(3) for c in (k, k + 1)])
        for k in range(2):
            groups.append([off + b(i, c) for i in (k, k + 1) for c in range(3)])
    grid = [[f"d{r}{c}" for c in range(3)] for r in range(3)]
    meta = {"setting": "steane", "rounds_per_cycle": rounds_per_cycle, "p": p, "p_idle": p_idle}
    return _finish(asm, rounds_per_cycle, n_rec, groups, grid, meta)


# ---------------------------------------------------------------------------
# black-box setting


def build_blackbox_program(p: float, p_meas: float = 0.0, rounds_per_cycle: int = 2) -> Program:
    """Depolarize each data qubit once, then read all 12 gauges ideally.

    Each readout is flipped independently with ``p_meas``.
    """
    grid = [[f"d{r}{c}" for c in range(3)] for r in range(3)]
    asm = _Assembler([q for row in grid for q in row])
    cls_data = asm.noise_class("data", p)
    cls_meas = asm.noise_class("readout", p_meas)
    for row in grid:
        for q in row:
            asm.op(PAULI, (q,), -1, cls_data)
    zz = [(grid[r][k], grid[r][k + 1], k) for k in range(2) for r in range(3)]
    xx = [(grid[k][c], grid[k + 1][c], k) for k in range(2) for c in range(3)]
    n_rec = len(zz) + len(xx)
    groups = []
    for r in range(rounds_per_cycle):
        off = r * n_rec
        for i, (qa, qb, _) in enumerate(zz):
            asm.op(CHECK_ZZ, (qa, qb), off + i, cls_meas)
        for i, (qa, qb, _) in enumerate(xx):
            asm.op(CHECK_XX, (qa, qb), off + len(zz) + i, cls_meas)
        for k in range(2):
            groups.append([off + i for i, g in enumerate(zz) if g[2] == k])
        for k in range(2):
            groups.append([off + len(zz) + i for i, g in enumerate(xx) if g[2] == k])
    meta = {"setting": "blackbox", "rounds_per_cycle": rounds_per_cycle, "p": p, "p_meas": p_meas}
    return _finish(asm, rounds_per_cycle, n_rec, groups, grid, meta)
