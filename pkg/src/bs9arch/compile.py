"""Compilation of standard Clifford gates into the native gate set.

Sequences are found by a uniform-cost search over the two-qubit Clifford
group modulo global phase: every native gate has a fault weight (its
biased multiple of ``p``), and the cheapest word reaching the target is
returned, ties broken by depth.  Results are verified against explicit
2x2 / 4x4 matrices.
"""

from __future__ import annotations

import heapq
import itertools
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .model import GateKind, NoiseTable

ATOL = 1e-10
SUPPORTED = ("H", "CNOT", "SWAP", "M_X")

_S2 = 1 / np.sqrt(2)
NATIVE_MATRICES = {
    GateKind.PHASE_HALF: np.diag([1, 1j]),
    GateKind.PHASE_FULL: np.diag([1, -1]).astype(complex),
    GateKind.X_HALF: _S2 * np.array([[1, -1j], [-1j, 1]]),
    GateKind.X_FULL: np.array([[0, 1], [1, 0]], dtype=complex),
    GateKind.CPHASE: np.diag([1, 1, 1, -1]).astype(complex),
}

TARGETS = {
    "H": _S2 * np.array([[1, 1], [1, -1]], dtype=complex),
    # control on the first qubit, big-endian ordering
    "CNOT": np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex),
    "SWAP": np.array([[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]], dtype=complex),
}

_WEIGHT = NoiseTable(0.25, biased=True)


@dataclass(frozen=True)
class NativeOp:
    """A native gate on qubit indices ``qubits`` (0 or 1)."""

    kind: GateKind
    qubits: tuple[int, ...]


@dataclass(frozen=True)
class Compiled:
    """A native sequence with its fault weight (in units of ``p``) and depth."""

    target: str
    ops: tuple[NativeOp, ...]
    weight: float
    depth: int

    def unitary(self) -> np.ndarray:
        n = 1 if self.target in ("H", "M_X") else 2
        return sequence_unitary(self.ops, n)

    def to_dict(self) -> dict:
        return {
            "target": self.target,
            "ops": [[op.kind.value, *op.qubits] for op in self.ops],
            "weight_p": round(self.weight, 12),
            "depth": self.depth,
        }


def fault_weight(kind: GateKind) -> float:
    """Failure probability of ``kind`` in units of ``p`` (biased model)."""
    return _WEIGHT.rate(kind) / _WEIGHT.p


def embed(op: NativeOp, n: int) -> np.ndarray:
    """Matrix of ``op`` on ``n`` qubits (qubit 0 most significant)."""
    m = NATIVE_MATRICES[op.kind]
    if op.kind.arity == 2:
        return m
    if n == 1:
        return m
    eye = np.eye(2, dtype=complex)
    return np.kron(m, eye) if op.qubits[0] == 0 else np.kron(eye, m)


def sequence_unitary(ops, n: int) -> np.ndarray:
    """Product of ``ops`` applied left to right in time."""
    u = np.eye(2**n, dtype=complex)
    for op in ops:
        u = embed(op, n) @ u
    return u


def equal_up_to_phase(a: np.ndarray, b: np.ndarray, atol: float = ATOL) -> bool:
    """True if ``a = e^{i phi} b`` within ``atol`` entrywise."""
    k = np.unravel_index(np.argmax(np.abs(b)), b.shape)
    if abs(a[k]) < atol:
        return False
    phase = a[k] / b[k]
    return bool(abs(abs(phase) - 1) < atol and np.allclose(a, phase * b, atol=atol, rtol=0))


def sequence_depth(ops, n: int) -> int:
    """Ticks needed when each op starts as soon as its qubits are free."""
    free = [0] * n
    for op in ops:
        t = max(free[q] for q in op.qubits) + op.kind.duration
        for q in op.qubits:
            free[q] = t
    return max(free) if ops else 0


def _key(u: np.ndarray) -> bytes:
    # canonical representative modulo global phase
    flat = u.ravel()
    k = int(np.argmax(np.abs(flat) > 1e-6))
    v = flat * (abs(flat[k]) / flat[k])
    # adding 0.0 folds -0.0 into 0.0 so equal matrices share a key
    return (np.round(v, 6) + 0.0).tobytes()


def _alphabet(n: int) -> list[NativeOp]:
    kinds = (GateKind.PHASE_HALF, GateKind.PHASE_FULL, GateKind.X_HALF, GateKind.X_FULL)
    ops = [NativeOp(k, (q,)) for q in range(n) for k in kinds]
    if n == 2:
        ops.append(NativeOp(GateKind.CPHASE, (0, 1)))
    return ops


def _search(n: int, accept, max_weight: float = 80.0) -> tuple[NativeOp, ...]:
    """Cheapest word whose unitary satisfies ``accept``; ties by depth, length.

    Each unitary is expanded once, from the first word popped for it.
    """
    alphabet = _alphabet(n)
    start = np.eye(2**n, dtype=complex)
    counter = itertools.count()
    heap = [(0.0, 0, 0, next(counter), (), start)]
    seen: set[bytes] = set()
    while heap:
        w, d, _, _, word, u = heapq.heappop(heap)
        key = _key(u)
        if key in seen:
            continue
        seen.add(key)
        if accept(u):
            return word
        for op in alphabet:
            w2 = w + fault_weight(op.kind)
            if w2 > max_weight:
                continue
            u2 = embed(op, n) @ u
            if _key(u2) in seen:
                continue
            word2 = word + (op,)
            heapq.heappush(heap, (w2, sequence_depth(word2, n), len(word2), next(counter), word2, u2))
    raise RuntimeError("no native sequence within the weight cap")


def _measures_x(u: np.ndarray) -> bool:
    # U X U^dag = +-Z, so measuring Z after U measures X
    z = np.diag([1, -1]).astype(complex)
    x = np.array([[0, 1], [1, 0]], dtype=complex)
    m = u @ x @ u.conj().T
    return bool(np.allclose(m, z, atol=ATOL) or np.allclose(m, -z, atol=ATOL))


@lru_cache(maxsize=None)
def compile_to_native(gate: str) -> Compiled:
    """Cheapest native sequence for ``gate`` in ``{"H", "CNOT", "SWAP", "M_X"}``.

    ``M_X`` returns the basis change followed by ``MEASURE_Z``; a basis
    change mapping X to -Z only relabels the outcome.
    """
    if gate not in SUPPORTED:
        raise ValueError(f"unsupported gate {gate!r}; choose from {SUPPORTED}")
    if gate == "M_X":
        ops = _search(1, _measures_x) + (NativeOp(GateKind.MEASURE_Z, (0,)),)
        n = 1
    else:
        target = TARGETS[gate]
        n = 1 if gate == "H" else 2
        ops = _search(n, lambda u: equal_up_to_phase(u, target))
    weight = sum(fault_weight(op.kind) for op in ops)
    return Compiled(gate, ops, weight, sequence_depth(ops, n))


def verify(compiled: Compiled) -> bool:
    """Matrix-oracle check of a compiled sequence."""
    if compiled.target == "M_X":
        return _measures_x(sequence_unitary(compiled.ops[:-1], 1))
    return equal_up_to_phase(compiled.unitary(), TARGETS[compiled.target])


__all__ = [
    "Compiled",
    "NATIVE_MATRICES",
    "NativeOp",
    "SUPPORTED",
    "TARGETS",
    "compile_to_native",
    "equal_up_to_phase",
    "fault_weight",
    "sequence_depth",
    "sequence_unitary",
    "verify",
]
