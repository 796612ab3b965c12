"""Monte Carlo estimation of the error-correction failure rate.

Trials are grouped in chunks of :data:`CHUNK` trials.  Chunk ``c`` draws
all of its randomness from a Philox stream keyed by the seed with counter
``c``, so the faults of any trial are a pure function of ``(seed, trial)``
and the chunk size.  Faults are placed by geometric skipping: for each
noise class the locations of all trials of the chunk form one Bernoulli
sequence, and only the gaps between faults are drawn.

A trial runs ``n_cycles`` noisy EC cycles (leading and trailing by
default), decodes after each, then closes with an ideal round.  It fails
when the residual data frame anticommutes with a bare logical operator.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import beta, norm

from . import backend
from .program import N_CHOICES, OPCODE_NAMES, Program, build_native_program

CHUNK = 4096
EXACT_BELOW = 30  # failures below which the exact binomial interval is used


@dataclass(frozen=True)
class Fault:
    """One injected fault: operation index, affected qubits and its Pauli."""

    loc: int
    op: str
    qubits: tuple[str, ...]
    pauli: str


@dataclass
class TrialOutcome:
    logical_x_failure: bool
    logical_z_failure: bool
    syndromes: list[tuple[int, ...]]
    applied: list[bool]
    faults: int

    @property
    def failed(self) -> bool:
        return self.logical_x_failure or self.logical_z_failure


@dataclass
class PecEstimate:
    p: float | None
    trials: int
    failures: int
    x_failures: int
    z_failures: int
    seed: int
    meta: dict = field(default_factory=dict)

    @property
    def estimate(self) -> float:
        return self.failures / self.trials

    @property
    def interval(self) -> tuple[float, float]:
        return binomial_interval(self.failures, self.trials)

    @property
    def ci95(self) -> float:
        lo, hi = self.interval
        return max(self.estimate - lo, hi - self.estimate)

    def to_dict(self) -> dict:
        lo, hi = self.interval
        return {
            "p": self.p,
            "trials": self.trials,
            "failures": self.failures,
            "x_failures": self.x_failures,
            "z_failures": self.z_failures,
            "estimate": self.estimate,
            "ci95": self.ci95,
            "ci_low": lo,
            "ci_high": hi,
            "seed": self.seed,
            **self.meta,
        }


def binomial_interval(k: int, n: int, level: float = 0.95) -> tuple[float, float]:
    """Normal-approximation interval, or Clopper-Pearson for few failures."""
    if n <= 0:
        raise ValueError("trials must be positive")
    alpha = 1.0 - level
    if k < EXACT_BELOW:
        lo = 0.0 if k == 0 else float(beta.ppf(alpha / 2, k, n - k + 1))
        hi = 1.0 if k == n else float(beta.ppf(1 - alpha / 2, k + 1, n - k))
        return lo, hi
    est = k / n
    z = float(norm.ppf(1 - alpha / 2))
    h = z * math.sqrt(est * (1 - est) / n)
    return max(0.0, est - h), min(1.0, est + h)


# ---------------------------------------------------------------------------
# fault sampling


def _stream(seed: int, chunk: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=seed, counter=[0, 0, 0, chunk]))


def _bernoulli_positions(rng: np.random.Generator, q: float, n: int) -> np.ndarray:
    """Indices of successes in ``n`` independent Bernoulli(q) draws."""
    if q >= 1.0:
        return np.arange(n, dtype=np.int64)
    parts = []
    last = -1
    while True:
        mean = (n - 1 - last) * q
        gaps = rng.geometric(q, int(mean + 6 * math.sqrt(mean) + 16))
        pos = last + np.cumsum(gaps, dtype=np.int64)
        parts.append(pos[pos < n])
        if pos[-1] >= n:
            break
        last = int(pos[-1])
    return np.concatenate(parts)


def sample_chunk(prog: Program, n_cycles: int, seed: int, chunk: int, n_trials: int):
    """Faults of one chunk as a CSR triple ``(ptr, loc, code)``.

    ``loc`` is ``cycle * n_ops + op``; ``code`` indexes the fault choice
    (``1..3`` one-qubit Pauli with bit 0 = X and bit 1 = Z, ``1..15``
    two-qubit Pauli with the second qubit in bits 2-3, ``1`` for a flip).
    """
    rng = _stream(seed, chunk)
    n_ops = prog.n_ops
    nch = N_CHOICES[prog.ops[:, 0]] if n_ops else np.zeros(0, dtype=np.int32)
    trials, locs, codes = [], [], []
    for q, ops_k in zip(prog.class_probs, prog.class_locations()):
        per = len(ops_k) * n_cycles
        if q <= 0.0 or per == 0:
            continue
        pos = _bernoulli_positions(rng, float(q), per * n_trials)
        t, j = np.divmod(pos, per)
        cyc, o = np.divmod(j, len(ops_k))
        op = ops_k[o]
        trials.append(t)
        locs.append(cyc * n_ops + op)
        codes.append(1 + (rng.random(len(pos)) * nch[op]).astype(np.int64))
    if trials:
        t = np.concatenate(trials)
        loc = np.concatenate(locs)
        code = np.concatenate(codes)
        order = np.lexsort((loc, t))
        t, loc, code = t[order], loc[order], code[order]
    else:
        t = loc = np.zeros(0, dtype=np.int64)
        code = np.zeros(0, dtype=np.int64)
    ptr = np.searchsorted(t, np.arange(n_trials + 1)).astype(np.int64)
    return ptr, loc.astype(np.int64), code.astype(np.int8)


def _kernel_args(prog: Program, n_cycles: int, relative: bool) -> tuple:
    c = np.ascontiguousarray
    return (
        c(prog.ops, dtype=np.int32),
        c(prog.stab_ptr, dtype=np.int32),
        c(prog.stab_idx, dtype=np.int32),
        c(prog.corr_x, dtype=np.int32),
        c(prog.corr_z, dtype=np.int32),
        c(prog.zstab, dtype=np.int32),
        c(prog.xstab, dtype=np.int32),
        c(prog.fail_x, dtype=np.int32),
        c(prog.fail_z, dtype=np.int32),
        prog.n_qubits,
        prog.rounds,
        prog.n_rec,
        n_cycles,
        int(relative),
    )


def _chunks(trials: int) -> list[tuple[int, int]]:
    return [(c, min(CHUNK, trials - c * CHUNK)) for c in range(-(-trials // CHUNK))]


def _run_chunks(prog: Program, n_cycles: int, relative: bool, seed: int, chunks, kernel_name: str | None) -> np.ndarray:
    """Failure counts ``[any, x, z]`` over the given chunks."""
    kernel = backend.get(kernel_name)
    args = _kernel_args(prog, n_cycles, relative)
    total = np.zeros(3, dtype=np.int64)
    for chunk, n in chunks:
        # always draw the full chunk so trial t does not depend on the total
        ptr, loc, code = sample_chunk(prog, n_cycles, seed, chunk, CHUNK)
        ptr = ptr[: n + 1]
        loc, code = loc[: ptr[-1]], code[: ptr[-1]]
        out = np.zeros(n, dtype=np.uint8)
        kernel.run_chunk(*args, ptr, loc, code, out)
        total += [np.count_nonzero(out), np.count_nonzero(out & 1), np.count_nonzero(out & 2)]
    return total


def default_workers() -> int:
    """Worker count from ``BS9_WORKERS``, else 1."""
    return max(1, int(os.environ.get("BS9_WORKERS", "1")))


def estimate_pec(
    prog: Program,
    trials: int,
    seed: int = 0,
    *,
    n_cycles: int = 2,
    relative: bool = True,
    workers: int | None = None,
    kernel: str | None = None,
    p: float | None = None,
) -> PecEstimate:
    """Estimate ``P_EC`` from ``trials`` independent trials.

    The result depends only on ``(prog, trials, seed, n_cycles,
    relative)``: chunks are dealt to workers round-robin and their counts
    are summed.  ``relative`` selects the extended-rectangle correctness
    verdict instead of the absolute logical state (see
    :func:`bs9arch.sim._fallback.run_trial`).
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    workers = default_workers() if workers is None else max(1, int(workers))
    chunks = _chunks(trials)
    if workers == 1 or len(chunks) == 1:
        counts = _run_chunks(prog, n_cycles, relative, seed, chunks, kernel)
    else:
        shares = [chunks[i::workers] for i in range(workers)]
        with ProcessPoolExecutor(max_workers=workers) as ex:
            futs = [ex.submit(_run_chunks, prog, n_cycles, relative, seed, s, kernel) for s in shares if s]
            counts = sum(f.result() for f in futs)
    if p is None:
        p = prog.meta.get("p", prog.meta.get("noise", {}).get("p"))
    return PecEstimate(
        p,
        trials,
        int(counts[0]),
        int(counts[1]),
        int(counts[2]),
        seed,
        {"setting": prog.meta.get("setting"), "n_cycles": n_cycles, "relative": relative},
    )


# ---------------------------------------------------------------------------
# single trials


def _pauli_label(opcode: int, code: int) -> str:
    if N_CHOICES[opcode] == 1:
        return "flip"
    one = "IXZY"
    if N_CHOICES[opcode] == 3:
        return one[code]
    return one[code & 3] + one[code >> 2]


def describe_faults(prog: Program, locs, codes) -> list[Fault]:
    out = []
    for loc, code in zip(locs, codes):
        op = int(loc) % prog.n_ops
        opcode, q0, q1, _ = (int(v) for v in prog.ops[op])
        qs = (prog.qubits[q0],) if q1 < 0 else (prog.qubits[q0], prog.qubits[q1])
        out.append(Fault(int(loc), OPCODE_NAMES[opcode], qs, _pauli_label(opcode, int(code))))
    return out


def sample_faults(schedule, noise, rng_seed: int, layout=None) -> list[Fault]:
    """Faults of one extraction round of ``schedule`` under ``noise``.

    Every gate and every idle tick is a location; the list is a pure
    function of the seed.
    """
    from ..model import default_layout

    prog = build_native_program(schedule, layout or default_layout(), noise, rounds_per_cycle=1)
    ptr, loc, code = sample_chunk(prog, 1, rng_seed, 0, 1)
    return describe_faults(prog, loc, code)


def run_faults(prog: Program, locs, codes, n_cycles: int = 2, relative: bool = True) -> TrialOutcome:
    """Deterministic trial for an explicit fault list (any order)."""
    from ._fallback import run_trial

    locs = np.asarray(locs, dtype=np.int64)
    codes = np.asarray(codes, dtype=np.int64)
    if len(locs) and (locs.min() < 0 or locs.max() >= n_cycles * prog.n_ops):
        raise ValueError("fault location outside the trial")
    order = np.argsort(locs, kind="stable")
    hist: list = []
    args = _kernel_args(prog, n_cycles, relative)
    bits = run_trial(
        [tuple(int(v) for v in row) for row in args[0]],
        *[a.tolist() for a in args[1:9]],
        *args[9:],
        locs[order].tolist(),
        codes[order].tolist(),
        history=hist,
    )
    return TrialOutcome(bool(bits & 1), bool(bits & 2), [h[0] for h in hist], [h[1] for h in hist], len(locs))


def run_ec_trial(
    prog: Program, rng_seed: int, trial: int = 0, n_cycles: int = 2, relative: bool = True
) -> TrialOutcome:
    """Trial number ``trial`` of the stream keyed by ``rng_seed``."""
    chunk, t = divmod(trial, CHUNK)
    ptr, loc, code = sample_chunk(prog, n_cycles, rng_seed, chunk, CHUNK)
    return run_faults(prog, loc[ptr[t] : ptr[t + 1]], code[ptr[t] : ptr[t + 1]], n_cycles, relative)
