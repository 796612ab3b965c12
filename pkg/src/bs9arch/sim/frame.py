"""Named Pauli frames and the repeat-twice decoder.

These are the readable counterparts of the array kernels: a
:class:`PauliFrame` keyed by qubit name, gate-by-gate conjugation with
:func:`propagate`, and :func:`decode_bs9` working on raw gauge outcomes.
The kernels implement the same rules on integer indices.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..model import GateKind, Layout, default_layout
from .program import _bs9_grid

# syndrome value -> flagged column (Z type) or row (X type)
FLAGGED = {1: 0, 3: 1, 2: 2}


@dataclass
class PauliFrame:
    """Accumulated Pauli error ``X^x Z^z`` per qubit, phases dropped.

    ``flips`` holds classical outcome flips per record key and
    ``corrections`` logs feed-forward corrections as ``(qubit, pauli)``.
    """

    x: dict[str, int]
    z: dict[str, int]
    flips: dict = field(default_factory=dict)
    corrections: list[tuple[str, str]] = field(default_factory=list)

    @classmethod
    def empty(cls, qubits) -> "PauliFrame":
        return cls({q: 0 for q in qubits}, {q: 0 for q in qubits})

    def copy(self) -> "PauliFrame":
        return PauliFrame(dict(self.x), dict(self.z), dict(self.flips), list(self.corrections))

    def apply(self, qubit: str, pauli: str) -> "PauliFrame":
        """Compose ``pauli`` (``"I"``, ``"X"``, ``"Y"`` or ``"Z"``) into the frame."""
        if pauli not in ("I", "X", "Y", "Z"):
            raise ValueError(f"unknown Pauli {pauli!r}")
        self.x[qubit] ^= pauli in ("X", "Y")
        self.z[qubit] ^= pauli in ("Y", "Z")
        return self

    def label(self, qubit: str) -> str:
        return "IXZY"[self.x[qubit] | self.z[qubit] << 1]

    def __eq__(self, other) -> bool:
        return isinstance(other, PauliFrame) and self.x == other.x and self.z == other.z


def propagate(frame: PauliFrame, gate: GateKind, targets) -> PauliFrame:
    """Conjugate ``frame`` through ``gate`` on ``targets``; returns a new frame.

    Pauli gates and idles leave the bits unchanged.  ``PREP_ONE`` resets the
    qubit; ``MEASURE_Z`` records the X bit as an outcome flip under the
    qubit's name.
    """
    targets = tuple(targets)
    if len(targets) != gate.arity:
        raise ValueError(f"{gate.name} acts on {gate.arity} qubit(s), got {len(targets)}")
    out = frame.copy()
    q = targets[0]
    if gate is GateKind.PHASE_HALF:
        out.z[q] ^= out.x[q]
    elif gate is GateKind.X_HALF:
        out.x[q] ^= out.z[q]
    elif gate is GateKind.CPHASE:
        a, b = targets
        out.z[a] ^= frame.x[b]
        out.z[b] ^= frame.x[a]
    elif gate is GateKind.PREP_ONE:
        out.x[q] = out.z[q] = 0
    elif gate is GateKind.MEASURE_Z:
        out.flips[q] = out.x[q]
    return out


@dataclass(frozen=True)
class Decision:
    """Decoder output for one cycle.

    ``syndromes`` holds one ``(z0, z1, x0, x1)`` tuple per round;
    ``corrections`` lists ``(qubit, pauli)`` to apply and is empty when
    ``defer`` is set.
    """

    syndromes: tuple[tuple[int, int, int, int], ...]
    corrections: tuple[tuple[str, str], ...]
    defer: bool


def fold_gauges(outcomes) -> np.ndarray:
    """Fold 12 gauge bits per round into ``(z0, z1, x0, x1)``.

    Bits ``3k .. 3k+2`` are the horizontal ZZ gauges between data columns
    ``k`` and ``k+1`` (rows 0..2); bits ``6 + 3k .. 6 + 3k+2`` are the
    vertical XX gauges between data rows ``k`` and ``k+1`` (columns 0..2).
    """
    g = np.asarray(outcomes, dtype=np.uint8)
    if g.ndim == 1:
        g = g[None, :]
    if g.ndim != 2 or g.shape[1] != 12:
        raise ValueError(f"expected 12 gauge bits per round, got shape {g.shape}")
    return np.bitwise_xor.reduce(g.reshape(-1, 4, 3), axis=2)


def decode_bs9(outcomes, layout: Layout | None = None) -> Decision:
    """Repeat-twice decoding of one cycle's gauge outcomes.

    With several rounds the correction is applied only if every round
    gives the same syndrome; otherwise the cycle defers.  A Z-type
    syndrome flags a column and X goes on its row-0 qubit; an X-type
    syndrome flags a row and Z goes on its column-0 qubit.
    """
    syn = fold_gauges(outcomes)
    if syn.shape[0] == 0:
        raise ValueError("need at least one extraction round")
    grid = _bs9_grid(layout or default_layout())
    rounds = tuple(tuple(int(b) for b in row) for row in syn)
    if any(r != rounds[0] for r in rounds[1:]):
        return Decision(rounds, (), True)
    z0, z1, x0, x1 = rounds[0]
    corr = []
    if z0 | z1 << 1:
        corr.append((grid[0][FLAGGED[z0 | z1 << 1]], "X"))
    if x0 | x1 << 1:
        corr.append((grid[FLAGGED[x0 | x1 << 1]][0], "Z"))
    return Decision(rounds, tuple(corr), False)


def gauge_outcomes(frame: PauliFrame, layout: Layout | None = None) -> np.ndarray:
    """Ideal gauge outcomes of a data frame, in :func:`fold_gauges` order."""
    grid = _bs9_grid(layout or default_layout())
    bits = [frame.x[grid[r][k]] ^ frame.x[grid[r][k + 1]] for k in range(2) for r in range(3)]
    bits += [frame.z[grid[k][c]] ^ frame.z[grid[k + 1][c]] for k in range(2) for c in range(3)]
    return np.array(bits, dtype=np.uint8)


def logical_failure(frame: PauliFrame, layout: Layout | None = None) -> tuple[bool, bool]:
    """Whether the data frame anticommutes with ``Z_L`` (X failure) or ``X_L``.

    ``X_L`` is X on a full row and ``Z_L`` Z on a full column; both commute
    with every gauge operator.
    """
    grid = _bs9_grid(layout or default_layout())
    fx = sum(frame.x[grid[r][0]] for r in range(3)) & 1
    fz = sum(frame.z[grid[0][c]] for c in range(3)) & 1
    return bool(fx), bool(fz)


__all__ = [
    "Decision",
    "PauliFrame",
    "decode_bs9",
    "fold_gauges",
    "gauge_outcomes",
    "logical_failure",
    "propagate",
]
