"""Syndrome-extraction circuits for the 21-qubit Bacon-Shor memory.

A :class:`Circuit` is a set of gates plus, for every qubit, the order in
which that qubit's gates may run.  Orders are written as chains of
*segments*: gates inside one segment commute and may run in any order,
while segments run strictly one after another.  A data qubit carries two
alternative chains (horizontal checks first, or vertical checks first);
choosing between them is a scheduling decision.
"""

from __future__ import annotations

import enum
import json
from collections import Counter
from dataclasses import dataclass, field
from itertools import combinations
from pathlib import Path
from typing import Mapping

from .model import GateKind, Layout, Role


class NonlocalKind(enum.Enum):
    """Abstract basis used by the Steane-style baseline."""

    PREP_ZERO = "prep0"
    PREP_ONE = "prep1"
    PREP_PLUS = "prep+"
    CNOT = "cnot"
    MEASURE_X = "mx"
    MEASURE_Z = "mz"

    @property
    def duration(self) -> int:
        return 1

    @property
    def arity(self) -> int:
        return 2 if self is NonlocalKind.CNOT else 1

    @property
    def is_idle(self) -> bool:
        return False

    @property
    def is_measurement_like(self) -> bool:
        return self in (NonlocalKind.MEASURE_X, NonlocalKind.MEASURE_Z)

    @property
    def is_coherent_single(self) -> bool:
        return False


Kind = GateKind | NonlocalKind


def _kind_from_value(value: str) -> Kind:
    try:
        return GateKind(value)
    except ValueError:
        return NonlocalKind(value)


@dataclass(frozen=True)
class Gate:
    id: int
    kind: Kind
    qubits: tuple[str, ...]
    label: str = ""
    length: int = 0  # explicit duration; only idle windows use it

    @property
    def duration(self) -> int:
        return self.length or self.kind.duration


Segment = tuple[int, ...]
Chain = tuple[Segment, ...]


class CircuitError(ValueError):
    pass


@dataclass(frozen=True)
class Circuit:
    qubits: tuple[str, ...]
    gates: tuple[Gate, ...]
    orders: Mapping[str, tuple[Chain, ...]]
    meta: Mapping[str, object] = field(default_factory=dict)

    def __post_init__(self) -> None:
        for i, g in enumerate(self.gates):
            if g.id != i:
                raise CircuitError("gate ids must be 0..n-1 in order")
        for q in self.qubits:
            on_q = {g.id for g in self.gates if q in g.qubits}
            for chain in self.orders.get(q, ((),)):
                listed = [gid for seg in chain for gid in seg]
                if sorted(listed) != sorted(on_q):
                    raise CircuitError(f"order for {q} does not cover its gates exactly")

    def gates_on(self, qubit: str) -> list[Gate]:
        return [g for g in self.gates if qubit in g.qubits]

    def precedence_edges(self, choice: Mapping[str, int] | None = None) -> list[tuple[int, int]]:
        """Edges (a, b) meaning gate ``a`` finishes before ``b`` starts."""
        edges = set()
        for q, alts in self.orders.items():
            chain = alts[(choice or {}).get(q, 0)]
            for prev, nxt in zip(chain, chain[1:]):
                for a in prev:
                    for b in nxt:
                        edges.add((a, b))
        return sorted(edges)

    def unconditional_edges(self) -> list[tuple[int, int]]:
        """Edges present under every ordering alternative."""
        common = None
        for q, alts in self.orders.items():
            per_alt = []
            for chain in alts:
                es = set()
                for i, seg in enumerate(chain):
                    for later in chain[i + 1 :]:
                        es.update((a, b) for a in seg for b in later)
                per_alt.append(es)
            shared = set.intersection(*per_alt) if per_alt else set()
            common = shared if common is None else common | shared
        return sorted(common or ())

    def commute_pairs(self) -> list[tuple[int, int]]:
        """Gate pairs sharing a qubit whose relative order is left free."""
        pairs = set()
        for q, alts in self.orders.items():
            for chain in alts:
                for seg in chain:
                    pairs.update(tuple(sorted(p)) for p in combinations(seg, 2))
        return sorted(pairs)

    def is_acyclic(self) -> bool:
        succ: dict[int, set[int]] = {g.id: set() for g in self.gates}
        for a, b in self.precedence_edges():
            succ[a].add(b)
        state: dict[int, int] = {}

        def visit(n: int) -> bool:
            state[n] = 1
            for m in succ[n]:
                if state.get(m) == 1 or (m not in state and not visit(m)):
                    return False
            state[n] = 2
            return True

        return all(visit(n) for n in succ if n not in state)

    def to_dict(self) -> dict:
        return {
            "qubits": list(self.qubits),
            "gates": [
                {"id": g.id, "kind": g.kind.value, "qubits": list(g.qubits), "label": g.label}
                | ({"length": g.length} if g.length else {})
                for g in self.gates
            ],
            "orders": {
                q: [[list(seg) for seg in chain] for chain in alts] for q, alts in self.orders.items()
            },
            "edges": [list(e) for e in self.unconditional_edges()],
            "commute": [list(p) for p in self.commute_pairs()],
            "meta": dict(self.meta),
        }

    @classmethod
    def from_dict(cls, doc: Mapping) -> "Circuit":
        gates = tuple(
            Gate(
                int(g["id"]),
                _kind_from_value(g["kind"]),
                tuple(g["qubits"]),
                g.get("label", ""),
                int(g.get("length", 0)),
            )
            for g in doc["gates"]
        )
        orders = {
            q: tuple(tuple(tuple(seg) for seg in chain) for chain in alts)
            for q, alts in doc["orders"].items()
        }
        return cls(tuple(doc["qubits"]), gates, orders, doc.get("meta", {}))

    def dump(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=1) + "\n")

    @classmethod
    def load(cls, path: str | Path) -> "Circuit":
        return cls.from_dict(json.loads(Path(path).read_text()))


class _Builder:
    def __init__(self) -> None:
        self.gates: list[Gate] = []

    def add(self, kind: Kind, *qubits: str, label: str = "", length: int = 0) -> int:
        gid = len(self.gates)
        self.gates.append(Gate(gid, kind, tuple(qubits), label, length))
        return gid


def check_pairs(layout: Layout) -> list[tuple[str, str, str]]:
    """``(ancilla, data_a, data_b)`` for every parity check of the layout.

    Z-ancillas pair with their horizontal data neighbours, X-ancillas with
    their vertical ones.
    """
    out = []
    for anc in layout.qubits:
        if anc.role is Role.DATA:
            continue
        if anc.role is Role.Z_ANCILLA:
            nbrs = [layout.at(anc.row, anc.col - 1), layout.at(anc.row, anc.col + 1)]
        else:
            nbrs = [layout.at(anc.row - 1, anc.col), layout.at(anc.row + 1, anc.col)]
        if any(n is None or n.role is not Role.DATA for n in nbrs):
            raise CircuitError(f"uncoupled check: ancilla {anc.id} lacks two data neighbours")
        for n in nbrs:
            if layout.coupling(anc.id, n.id) is None:
                raise CircuitError(f"uncoupled check: {anc.id}-{n.id}")
        out.append((anc.id, nbrs[0].id, nbrs[1].id))
    return out


def build_bs9_extraction(layout: Layout) -> Circuit:
    """One round of gauge-check extraction over the native gate set.

    Every ancilla runs ``prep|1>, X90, CPHASE, CPHASE, X90, M_Z``; the two
    X90 pulses move it into and out of the Y basis so that the CPHASE
    kicks accumulate the parity.  For vertical (XX) checks the data qubits
    are rotated with ``Z90, X90`` before and ``X90, Z90`` after, which maps
    X onto Z and back up to a known Pauli.
    """
    b = _Builder()
    orders: dict[str, tuple[Chain, ...]] = {}
    zz_cz: dict[str, list[int]] = {}
    xx_cz: dict[str, list[int]] = {}
    for anc, da, db in check_pairs(layout):
        role = layout.qubit(anc).role
        prep = b.add(GateKind.PREP_ONE, anc, label=f"prep:{anc}")
        rot_in = b.add(GateKind.X_HALF, anc, label=f"rot_in:{anc}")
        cza = b.add(GateKind.CPHASE, da, anc, label=f"cz:{anc}")
        czb = b.add(GateKind.CPHASE, db, anc, label=f"cz:{anc}")
        rot_out = b.add(GateKind.X_HALF, anc, label=f"rot_out:{anc}")
        meas = b.add(GateKind.MEASURE_Z, anc, label=f"meas:{anc}")
        orders[anc] = (((prep,), (rot_in,), (cza, czb), (rot_out,), (meas,)),)
        bucket = zz_cz if role is Role.Z_ANCILLA else xx_cz
        bucket.setdefault(da, []).append(cza)
        bucket.setdefault(db, []).append(czb)

    for d in layout.by_role(Role.DATA):
        z_in = b.add(GateKind.PHASE_HALF, d.id, label=f"z_in:{d.id}")
        x_in = b.add(GateKind.X_HALF, d.id, label=f"x_in:{d.id}")
        x_out = b.add(GateKind.X_HALF, d.id, label=f"x_out:{d.id}")
        z_out = b.add(GateKind.PHASE_HALF, d.id, label=f"z_out:{d.id}")
        zc = tuple(zz_cz.get(d.id, ()))
        xc = tuple(xx_cz.get(d.id, ()))
        rows_first = (zc + (z_in,), (x_in,), xc, (x_out,), (z_out,))
        cols_first = ((z_in,), (x_in,), xc, (x_out,), (z_out,) + zc)
        orders[d.id] = tuple(tuple(s for s in ch if s) for ch in (rows_first, cols_first))

    return Circuit(
        tuple(layout.qubit_ids),
        tuple(b.gates),
        orders,
        {"name": "bs9_extraction", "rounds": 1},
    )


Census = dict[str, int]


def gate_census(obj) -> Census:
    """Count gates by kind.  For schedules, idle ticks are counted too.

    Idle windows count one per tick, like the idle ticks of a schedule.
    """
    from .schedule import Schedule

    counts: Counter = Counter()
    circuit = obj.circuit if isinstance(obj, Schedule) else obj
    for g in circuit.gates:
        counts[g.kind.value] += g.duration if g.kind in (GateKind.IDLE, GateKind.BARE_IDLE) else 1
    if isinstance(obj, Schedule):
        for kind, n in obj.idle_census().items():
            counts[kind.value] += n
    full = {k.value: 0 for k in GateKind}
    full.update(counts)
    return full


def census_table(census: Mapping[str, int]) -> str:
    width = max(len(k) for k in census)
    return "\n".join(f"{k:<{width}}  {v}" for k, v in census.items()) + "\n"


# --------------------------------------------------------------------------
# Steane-style baseline over the nonlocal basis


def build_steane_extraction(rows: int = 3, cols: int = 3) -> Circuit:
    """One Steane extraction round for the 3x3 Bacon-Shor code.

    Two encoded ancilla blocks are used.  Block ``A`` holds ``|+>_L`` with
    every row in a Z-basis GHZ state; the transversal CNOT data->A copies
    bit flips and ``M_Z`` on A yields the Z-type stabilizers.  Block ``B``
    holds ``|0>_L`` with every column in an X-basis GHZ state; the
    transversal CNOT B->data copies phase flips and ``M_X`` on B yields the
    X-type stabilizers.  ``|+>`` preparation stands for an ``M_X`` reset
    with feed-forward.
    """
    b = _Builder()
    data = [f"d{r}{c}" for r in range(rows) for c in range(cols)]
    anc_a = [f"a{r}{c}" for r in range(rows) for c in range(cols)]
    anc_b = [f"b{r}{c}" for r in range(rows) for c in range(cols)]
    seq: dict[str, list[int]] = {q: [] for q in data + anc_a + anc_b}

    def add(kind, *qs, label=""):
        gid = b.add(kind, *qs, label=label)
        for q in qs:
            seq[q].append(gid)
        return gid

    # A: per row, head in |+>, fan-out to the other two
    for r in range(rows):
        head, *rest = [f"a{r}{c}" for c in range(cols)]
        add(NonlocalKind.PREP_PLUS, head, label=f"prep:{head}")
        for q in rest:
            add(NonlocalKind.PREP_ZERO, q, label=f"prep:{q}")
        for q in rest:
            add(NonlocalKind.CNOT, head, q, label=f"ghz:{head}")
    # B: per column, two |+> feed parity into a |0>, giving an X-basis GHZ
    for c in range(cols):
        tgt, *srcs = [f"b{r}{c}" for r in range(rows)]
        add(NonlocalKind.PREP_ZERO, tgt, label=f"prep:{tgt}")
        for q in srcs:
            add(NonlocalKind.PREP_PLUS, q, label=f"prep:{q}")
        for q in srcs:
            add(NonlocalKind.CNOT, q, tgt, label=f"ghz:{tgt}")
    for r in range(rows):
        for c in range(cols):
            add(NonlocalKind.CNOT, f"d{r}{c}", f"a{r}{c}", label="transversal:A")
    for r in range(rows):
        for c in range(cols):
            add(NonlocalKind.CNOT, f"b{r}{c}", f"d{r}{c}", label="transversal:B")
    for q in anc_a:
        add(NonlocalKind.MEASURE_Z, q, label=f"meas:{q}")
    for q in anc_b:
        add(NonlocalKind.MEASURE_X, q, label=f"meas:{q}")

    orders = {q: (tuple((gid,) for gid in ids),) for q, ids in seq.items()}
    return Circuit(
        tuple(data + anc_a + anc_b),
        tuple(b.gates),
        orders,
        {"name": "steane_extraction", "rounds": 1},
    )


def steane_start_times(circuit: Circuit) -> dict[int, int]:
    """Hand timing for the Steane round, with no layout constraints.

    Preparations are staggered so that each ancilla waits at most one tick
    before its transversal CNOT (six waiting ticks per round), and each data
    qubit is touched on two consecutive ticks.  Consecutive rounds pipeline
    the next ancillas behind the current transversal layer, so data qubits
    never sit idle.
    """
    start: dict[int, int] = {}
    by_label: dict[str, list[Gate]] = {}
    for g in circuit.gates:
        by_label.setdefault(g.label, []).append(g)

    def first(label: str, qubit: str | None = None) -> Gate:
        for g in by_label[label]:
            if qubit is None or qubit in g.qubits:
                return g
        raise KeyError(label)

    names = {q for q in circuit.qubits}
    rows = 1 + max(int(q[1]) for q in names if q.startswith("d"))
    cols = 1 + max(int(q[2]) for q in names if q.startswith("d"))
    for r in range(rows):
        head = f"a{r}0"
        ghz = [g for g in by_label[f"ghz:{head}"]]
        start[first(f"prep:{head}").id] = 0
        for i, g in enumerate(ghz):
            start[g.id] = 1 + i
            tgt = g.qubits[1]
            start[first(f"prep:{tgt}").id] = i
    for c in range(cols):
        tgt = f"b0{c}"
        ghz = by_label[f"ghz:{tgt}"]
        start[first(f"prep:{tgt}").id] = 1
        for i, g in enumerate(ghz):
            start[g.id] = 2 + i
            start[first(f"prep:{g.qubits[0]}").id] = 1 + i
    # transversal CNOTs: A layer at tick 3, B layer at tick 4; the GHZ
    # members freed earlier are consumed first so nothing waits
    for g in by_label["transversal:A"]:
        start[g.id] = 3
    for g in by_label["transversal:B"]:
        start[g.id] = 4
    for g in circuit.gates:
        if g.label.startswith("meas:a"):
            start[g.id] = 4
        elif g.label.startswith("meas:b"):
            start[g.id] = 5
    return start
