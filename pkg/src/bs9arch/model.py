"""Domain types shared across the workbench: native gates, noise tables,
qubit layouts and CMOS controller topology.

One tick is the 30 ns clock period; every native gate lasts an integer
number of ticks.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping

TICK_NS = 30

BARE_IDLE_RATE = 9.99e-3
DD_IDLE_RATE = 5e-7


class GateKind(enum.Enum):
    """Native gate set of the double-quantum-dot qubit."""

    PREP_ONE = "prep1"
    MEASURE_Z = "mz"
    PHASE_HALF = "z90"
    PHASE_FULL = "z"
    X_HALF = "x90"
    X_FULL = "x"
    CPHASE = "cphase"
    IDLE = "idle"
    BARE_IDLE = "idle*"

    @property
    def duration(self) -> int:
        return _DURATIONS[self]

    @property
    def arity(self) -> int:
        return 2 if self is GateKind.CPHASE else 1

    @property
    def is_idle(self) -> bool:
        return self in (GateKind.IDLE, GateKind.BARE_IDLE)

    @property
    def is_measurement_like(self) -> bool:
        # prep |1> is realised by a measurement, so it shares the readout path
        return self in (GateKind.PREP_ONE, GateKind.MEASURE_Z)

    @property
    def is_coherent_single(self) -> bool:
        return self in (
            GateKind.PHASE_HALF,
            GateKind.PHASE_FULL,
            GateKind.X_HALF,
            GateKind.X_FULL,
        )


_DURATIONS = {
    GateKind.PREP_ONE: 1,
    GateKind.MEASURE_Z: 1,
    GateKind.PHASE_HALF: 1,
    GateKind.PHASE_FULL: 2,
    GateKind.X_HALF: 3,
    GateKind.X_FULL: 4,
    GateKind.CPHASE: 4,
    GateKind.IDLE: 1,
    GateKind.BARE_IDLE: 1,
}

# multiples of p under the biased model
_BIASED_MULTIPLE = {
    GateKind.PREP_ONE: 1 / 30,
    GateKind.MEASURE_Z: 1 / 30,
    GateKind.PHASE_HALF: 1,
    GateKind.PHASE_FULL: 2,
    GateKind.X_HALF: 4,
    GateKind.X_FULL: 4,
    GateKind.CPHASE: 4,
}


def gate_duration(kind: GateKind) -> int:
    """Duration of ``kind`` in ticks."""
    return kind.duration


@dataclass(frozen=True)
class NoiseTable:
    """Per-gate fault probabilities driven by the single parameter ``p``.

    Idle rates are constants independent of ``p``.  Measurement and
    preparation fail with ``p/30`` in both modes; the remaining coherent
    gates fail with ``p`` (unbiased) or the biased multiples.
    """

    p: float
    biased: bool = False
    idle_rate: float = DD_IDLE_RATE
    bare_idle_rate: float = BARE_IDLE_RATE
    overrides: Mapping[GateKind, float] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if not 0.0 <= self.p <= 1.0:
            raise ValueError(f"base rate p={self.p} outside [0, 1]")
        for kind in GateKind:
            prob = self.rate(kind)
            if not 0.0 <= prob <= 1.0:
                raise ValueError(f"{kind.name} fault probability {prob} outside [0, 1]")

    @classmethod
    def dpn(cls, p: float, **kw) -> "NoiseTable":
        return cls(p=p, biased=False, **kw)

    @classmethod
    def biased_dpn(cls, p: float, **kw) -> "NoiseTable":
        return cls(p=p, biased=True, **kw)

    @property
    def c_factor(self) -> int:
        """Largest native-gate multiple of ``p``; the crossover slope."""
        return 4 if self.biased else 1

    def rate(self, kind: GateKind) -> float:
        if kind in self.overrides:
            return self.overrides[kind]
        if kind is GateKind.IDLE:
            return self.idle_rate
        if kind is GateKind.BARE_IDLE:
            return self.bare_idle_rate
        if kind.is_measurement_like:
            return self.p / 30
        if self.biased:
            return _BIASED_MULTIPLE[kind] * self.p
        return self.p

    def with_p(self, p: float) -> "NoiseTable":
        return NoiseTable(p, self.biased, self.idle_rate, self.bare_idle_rate, dict(self.overrides))

    def to_dict(self) -> dict:
        return {
            "p": self.p,
            "biased": self.biased,
            "idle_rate": self.idle_rate,
            "bare_idle_rate": self.bare_idle_rate,
            "overrides": {k.value: v for k, v in self.overrides.items()},
        }

    @classmethod
    def from_dict(cls, doc: Mapping) -> "NoiseTable":
        _reject_unknown(doc, {"p", "biased", "idle_rate", "bare_idle_rate", "overrides"}, "noise")
        overrides = {GateKind(k): float(v) for k, v in doc.get("overrides", {}).items()}
        return cls(
            p=float(doc["p"]),
            biased=bool(doc.get("biased", False)),
            idle_rate=float(doc.get("idle_rate", DD_IDLE_RATE)),
            bare_idle_rate=float(doc.get("bare_idle_rate", BARE_IDLE_RATE)),
            overrides=overrides,
        )


def gate_fault_prob(kind: GateKind, noise: NoiseTable) -> float:
    return noise.rate(kind)


class Role(enum.Enum):
    DATA = "data"
    X_ANCILLA = "x_ancilla"
    Z_ANCILLA = "z_ancilla"


class Side(enum.Enum):
    LEFT = "left"
    RIGHT = "right"


@dataclass(frozen=True)
class Qubit:
    id: str
    role: Role
    row: int
    col: int


@dataclass(frozen=True)
class ControllerBlock:
    """A CMOS block; ``members`` are ordered from the block's edge inward,
    so signals for ``members[k]`` are routed over ``members[:k]``."""

    id: str
    members: tuple[str, ...]


@dataclass(frozen=True)
class Coupling:
    """CPHASE capacitor between two neighbouring DQDs.

    ``side`` is the side of the DQDs the capacitor sits on for a vertical
    pair.  A horizontal pair always couples through the facing sides: the
    right side of the left qubit and the left side of the right qubit.
    """

    a: str
    b: str
    side: Side

    @property
    def pair(self) -> frozenset[str]:
        return frozenset((self.a, self.b))


@dataclass(frozen=True)
class Layout:
    qubits: tuple[Qubit, ...]
    blocks: tuple[ControllerBlock, ...]
    couplings: tuple[Coupling, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "_by_id", {q.id: q for q in self.qubits})
        owner = {}
        for b in self.blocks:
            for m in b.members:
                owner.setdefault(m, b.id)
        object.__setattr__(self, "_owner", owner)
        object.__setattr__(self, "_couplings", {c.pair: c for c in self.couplings})

    def qubit(self, qid: str) -> Qubit:
        return self._by_id[qid]

    @property
    def qubit_ids(self) -> list[str]:
        return [q.id for q in self.qubits]

    def by_role(self, role: Role) -> list[Qubit]:
        return [q for q in self.qubits if q.role is role]

    def block_of(self, qid: str) -> str | None:
        return self._owner.get(qid)

    def block(self, bid: str) -> ControllerBlock:
        for b in self.blocks:
            if b.id == bid:
                return b
        raise KeyError(bid)

    def coupling(self, a: str, b: str) -> Coupling | None:
        return self._couplings.get(frozenset((a, b)))

    def coupling_side(self, qid: str, other: str) -> Side:
        """Side of ``qid`` through which it couples to ``other``."""
        c = self.coupling(qid, other)
        if c is None:
            raise KeyError(f"no coupling between {qid} and {other}")
        q, o = self.qubit(qid), self.qubit(other)
        if q.row == o.row:
            return Side.RIGHT if q.col < o.col else Side.LEFT
        return c.side

    def at(self, row: int, col: int) -> Qubit | None:
        for q in self.qubits:
            if q.row == row and q.col == col:
                return q
        return None

    def to_dict(self) -> dict:
        return {
            "qubits": [
                {"id": q.id, "role": q.role.value, "row": q.row, "col": q.col} for q in self.qubits
            ],
            "blocks": [{"id": b.id, "members": list(b.members)} for b in self.blocks],
            "couplings": [
                {"qubits": [c.a, c.b], "side": c.side.value} for c in self.couplings
            ],
        }

    @classmethod
    def from_dict(cls, doc: Mapping) -> "Layout":
        _reject_unknown(doc, {"qubits", "blocks", "couplings"}, "layout")
        qubits = []
        for q in doc["qubits"]:
            _reject_unknown(q, {"id", "role", "row", "col"}, "qubit")
            qubits.append(Qubit(str(q["id"]), Role(q["role"]), int(q["row"]), int(q["col"])))
        blocks = []
        for b in doc["blocks"]:
            _reject_unknown(b, {"id", "members"}, "block")
            blocks.append(ControllerBlock(str(b["id"]), tuple(b["members"])))
        couplings = []
        for c in doc["couplings"]:
            _reject_unknown(c, {"qubits", "side"}, "coupling")
            a, b = c["qubits"]
            couplings.append(Coupling(a, b, Side(c["side"])))
        return cls(tuple(qubits), tuple(blocks), tuple(couplings))

    @classmethod
    def load(cls, path: str | Path) -> "Layout":
        return cls.from_dict(json.loads(Path(path).read_text()))


def _reject_unknown(doc: Mapping, allowed: set[str], what: str) -> None:
    extra = set(doc) - allowed
    if extra:
        raise ValueError(f"unknown {what} field(s): {', '.join(sorted(extra))}")


def validate_layout(layout: Layout) -> list[str]:
    """Return a list of invariant violations; empty when the layout is sound."""
    problems: list[str] = []
    ids = [q.id for q in layout.qubits]
    seen: set[str] = set()
    for qid in ids:
        if qid in seen:
            problems.append(f"qubit {qid} declared twice")
        seen.add(qid)
    positions: dict[tuple[int, int], str] = {}
    for q in layout.qubits:
        if (q.row, q.col) in positions:
            problems.append(f"qubit {q.id} shares grid position with {positions[q.row, q.col]}")
        positions[q.row, q.col] = q.id

    membership: dict[str, list[str]] = {qid: [] for qid in ids}
    for b in layout.blocks:
        if not b.members:
            problems.append(f"block {b.id} has no members")
        if len(b.members) > 3:
            problems.append(f"block {b.id} exceeds 3 members")
        for m in b.members:
            if m not in membership:
                problems.append(f"block {b.id} references unknown qubit {m}")
            else:
                membership[m].append(b.id)
    for qid, owners in membership.items():
        if not owners:
            problems.append(f"qubit {qid} has no controller")
        elif len(owners) > 1:
            problems.append(f"qubit {qid} belongs to blocks {', '.join(owners)}")

    for c in layout.couplings:
        if c.a not in membership or c.b not in membership:
            problems.append(f"coupling {c.a}-{c.b} references an unknown qubit")
            continue
        qa, qb = layout.qubit(c.a), layout.qubit(c.b)
        if abs(qa.row - qb.row) + abs(qa.col - qb.col) != 1:
            problems.append(f"coupling {c.a}-{c.b} joins non-adjacent qubits")
    return problems


@dataclass(frozen=True)
class TechNode:
    name: str
    routes_per_micron: float

    def __post_init__(self) -> None:
        if self.routes_per_micron <= 0:
            raise ValueError("routes_per_micron must be positive")


TECH_NODES = (
    TechNode("130nm", 19),
    TechNode("90nm", 27),
    TechNode("65nm", 40),
    TechNode("10nm", 462),
    TechNode("1nm", 4662),
)


DATA_DIR = Path(__file__).parent / "data"


def default_layout() -> Layout:
    """The enclosed BS9(21) layout shipped with the package."""
    return Layout.load(DATA_DIR / "layout_bs9.json")


def bs9_grid_layout(
    blocks: Iterable[tuple[str, Iterable[str]]],
    vertical_sides: Mapping[tuple[str, str], Side] | None = None,
) -> Layout:
    """Build the 5x5 enclosed grid with a custom block assignment.

    Data qubits sit at odd (row, col) on a 1-indexed grid, Z-ancillas between
    horizontal data neighbours and X-ancillas between vertical ones.  Vertical
    couplings alternate Left/Right down each column unless overridden.
    """
    qubits = []
    for r in range(1, 6):
        for c in range(1, 6):
            if r % 2 and c % 2:
                qubits.append(Qubit(f"d{r}{c}", Role.DATA, r, c))
            elif r % 2:
                qubits.append(Qubit(f"z{r}{c}", Role.Z_ANCILLA, r, c))
            elif c % 2:
                qubits.append(Qubit(f"x{r}{c}", Role.X_ANCILLA, r, c))
    by_pos = {(q.row, q.col): q.id for q in qubits}
    couplings = []
    for (r, c), qid in sorted(by_pos.items()):
        right = by_pos.get((r, c + 1))
        if right:
            couplings.append(Coupling(qid, right, Side.RIGHT))
        down = by_pos.get((r + 1, c))
        if down:
            side = Side.LEFT if r % 2 else Side.RIGHT
            if vertical_sides and (qid, down) in vertical_sides:
                side = vertical_sides[qid, down]
            couplings.append(Coupling(qid, down, side))
    return Layout(
        tuple(qubits),
        tuple(ControllerBlock(bid, tuple(m)) for bid, m in blocks),
        tuple(couplings),
    )


DEFAULT_BLOCKS = (
    ("c1top", ("d11", "x21")),
    ("c1bot", ("d51", "x41")),
    ("r3left", ("d31", "z32")),
    ("c5top", ("d15", "x25")),
    ("c5bot", ("d55", "x45")),
    ("r3right", ("d35", "z34")),
    ("c3top", ("d13", "x23")),
    ("c3bot", ("d53", "x43", "d33")),
    ("z12", ("z12",)),
    ("z14", ("z14",)),
    ("z52", ("z52",)),
    ("z54", ("z54",)),
)
