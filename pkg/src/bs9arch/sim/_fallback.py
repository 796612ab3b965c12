"""Pure-Python trial kernel.

Same signature and results as the compiled :mod:`bs9arch.sim._kernel`;
selected automatically when the extension is not built.
"""

from __future__ import annotations

import numpy as np

from .program import (
    CHECK_XX,
    CHECK_ZZ,
    CNOT,
    CZ,
    MEAS_X,
    MEAS_Z,
    PHASE_HALF,
    PREP_X,
    PREP_Z,
    X_HALF,
)


def _syndrome(rec, lo, hi, stab_ptr, stab_idx, out, base):
    for j in range(lo, hi):
        s = 0
        for i in range(stab_ptr[j], stab_ptr[j + 1]):
            s ^= rec[stab_idx[i]]
        out[base + j - lo] = s


def run_trial(
    ops,
    stab_ptr,
    stab_idx,
    corr_x,
    corr_z,
    zstab,
    xstab,
    fail_x,
    fail_z,
    n_qubits,
    rounds,
    n_rec,
    n_cycles,
    relative,
    locs,
    codes,
    history=None,
):
    """Run one trial given its faults sorted by location.

    Returns ``x_fail | z_fail << 1``.  With ``relative`` set, the verdict
    compares the ideally decoded logical state after the last cycle with
    the one after the cycle before it (extended-rectangle correctness);
    otherwise it is the absolute logical state after the last cycle.  When ``history`` is a list, one
    ``(syndromes, applied)`` entry per cycle is appended, where
    ``syndromes`` holds ``4 * rounds`` bits and ``applied`` tells whether
    the cycle's correction was applied.
    """
    x = [0] * n_qubits
    z = [0] * n_qubits
    rec = [0] * max(n_rec * rounds, 1)
    syn = [0] * (4 * rounds)
    n_ops = len(ops)
    nf = len(locs)
    f = 0
    prev = 0
    for cyc in range(n_cycles):
        base = cyc * n_ops
        next_loc = locs[f] - base if f < nf else -1
        for i in range(n_ops):
            op, q0, q1, r = ops[i]
            if op == CZ:
                z[q0] ^= x[q1]
                z[q1] ^= x[q0]
            elif op == X_HALF:
                x[q0] ^= z[q0]
            elif op == PHASE_HALF:
                z[q0] ^= x[q0]
            elif op == MEAS_Z:
                rec[r] = x[q0]
            elif op == PREP_Z or op == PREP_X:
                x[q0] = 0
                z[q0] = 0
            elif op == CNOT:
                x[q1] ^= x[q0]
                z[q0] ^= z[q1]
            elif op == MEAS_X:
                rec[r] = z[q0]
            elif op == CHECK_ZZ:
                rec[r] = x[q0] ^ x[q1]
            elif op == CHECK_XX:
                rec[r] = z[q0] ^ z[q1]
            while i == next_loc:
                c = codes[f]
                if op == PREP_Z:
                    x[q0] ^= 1
                elif op == PREP_X:
                    z[q0] ^= 1
                elif r >= 0:
                    rec[r] ^= 1
                elif q1 < 0:
                    x[q0] ^= c & 1
                    z[q0] ^= c >> 1
                else:
                    x[q0] ^= c & 1
                    z[q0] ^= (c >> 1) & 1
                    x[q1] ^= (c >> 2) & 1
                    z[q1] ^= c >> 3
                f += 1
                next_loc = locs[f] - base if f < nf else -1
        _syndrome(rec, 0, 4 * rounds, stab_ptr, stab_idx, syn, 0)
        agree = True
        for k in range(1, rounds):
            for j in range(4):
                if syn[4 * k + j] != syn[j]:
                    agree = False
        if agree:
            q = corr_x[syn[0] | syn[1] << 1]
            if q >= 0:
                x[q] ^= 1
            q = corr_z[syn[2] | syn[3] << 1]
            if q >= 0:
                z[q] ^= 1
        if history is not None:
            history.append((tuple(syn), agree))
        if relative and cyc == n_cycles - 2:
            prev = _ideal_logical(x, z, corr_x, corr_z, zstab, xstab, fail_x, fail_z)
    return prev ^ _ideal_logical(x, z, corr_x, corr_z, zstab, xstab, fail_x, fail_z)


def _ideal_logical(x, z, corr_x, corr_z, zstab, xstab, fail_x, fail_z):
    """Logical bits after an ideal round and correction, frame untouched."""
    s = [0, 0, 0, 0]
    for k in range(2):
        for q in zstab[k]:
            s[k] ^= x[q]
        for q in xstab[k]:
            s[2 + k] ^= z[q]
    fx = 0
    for q in fail_x:
        fx ^= x[q]
    fz = 0
    for q in fail_z:
        fz ^= z[q]
    q = corr_x[s[0] | s[1] << 1]
    if q >= 0 and q in fail_x:
        fx ^= 1
    q = corr_z[s[2] | s[3] << 1]
    if q >= 0 and q in fail_z:
        fz ^= 1
    return fx | fz << 1


def run_chunk(
    ops,
    stab_ptr,
    stab_idx,
    corr_x,
    corr_z,
    zstab,
    xstab,
    fail_x,
    fail_z,
    n_qubits,
    rounds,
    n_rec,
    n_cycles,
    relative,
    fptr,
    floc,
    fcode,
    out,
):
    """Fill ``out[t]`` with the failure bits of every trial in the chunk.

    Trial ``t`` owns faults ``fptr[t]:fptr[t+1]``; trials without faults
    cannot fail and are skipped.
    """
    args = (
        [tuple(int(v) for v in row) for row in np.asarray(ops)],
        np.asarray(stab_ptr).tolist(),
        np.asarray(stab_idx).tolist(),
        np.asarray(corr_x).tolist(),
        np.asarray(corr_z).tolist(),
        np.asarray(zstab).tolist(),
        np.asarray(xstab).tolist(),
        np.asarray(fail_x).tolist(),
        np.asarray(fail_z).tolist(),
        int(n_qubits),
        int(rounds),
        int(n_rec),
        int(n_cycles),
        int(relative),
    )
    ptr = np.asarray(fptr).tolist()
    locs = np.asarray(floc).tolist()
    codes = np.asarray(fcode).tolist()
    for t in range(len(ptr) - 1):
        lo, hi = ptr[t], ptr[t + 1]
        out[t] = run_trial(*args, locs[lo:hi], codes[lo:hi]) if hi > lo else 0
