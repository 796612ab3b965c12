# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled trial kernel; mirrors :mod:`bs9arch.sim._fallback` exactly."""

from libc.stdlib cimport calloc, free
from libc.string cimport memset

cdef enum:
    PREP_Z = 0
    PREP_X = 1
    MEAS_Z = 2
    MEAS_X = 3
    PHASE_HALF = 4
    X_HALF = 5
    PAULI = 6
    CZ = 7
    CNOT = 8
    CHECK_ZZ = 9
    CHECK_XX = 10


cdef inline int _ideal_logical(unsigned char* x, unsigned char* z, const int[::1] corr_x, const int[::1] corr_z,
                               const int[:, ::1] zstab, const int[:, ::1] xstab,
                               const int[::1] fail_x, const int[::1] fail_z) noexcept nogil:
    cdef int s[4]
    cdef int k, i, q, fx = 0, fz = 0
    for k in range(4):
        s[k] = 0
    for k in range(2):
        for i in range(zstab.shape[1]):
            s[k] ^= x[zstab[k, i]]
        for i in range(xstab.shape[1]):
            s[2 + k] ^= z[xstab[k, i]]
    for i in range(fail_x.shape[0]):
        fx ^= x[fail_x[i]]
    for i in range(fail_z.shape[0]):
        fz ^= z[fail_z[i]]
    q = corr_x[s[0] | (s[1] << 1)]
    if q >= 0:
        for i in range(fail_x.shape[0]):
            if fail_x[i] == q:
                fx ^= 1
    q = corr_z[s[2] | (s[3] << 1)]
    if q >= 0:
        for i in range(fail_z.shape[0]):
            if fail_z[i] == q:
                fz ^= 1
    return fx | (fz << 1)


def run_chunk(const int[:, ::1] ops, const int[::1] stab_ptr, const int[::1] stab_idx,
              const int[::1] corr_x, const int[::1] corr_z,
              const int[:, ::1] zstab, const int[:, ::1] xstab,
              const int[::1] fail_x, const int[::1] fail_z,
              int n_qubits, int rounds, int n_rec, int n_cycles, int relative,
              const long long[::1] fptr, const long long[::1] floc, const signed char[::1] fcode,
              unsigned char[::1] out):
    """Fill ``out[t]`` with the failure bits of every trial in the chunk."""
    cdef Py_ssize_t n_trials = fptr.shape[0] - 1
    cdef Py_ssize_t n_ops = ops.shape[0]
    cdef int n_syn = 4 * rounds
    cdef unsigned char* x = <unsigned char*> calloc(n_qubits, 1)
    cdef unsigned char* z = <unsigned char*> calloc(n_qubits, 1)
    cdef unsigned char* rec = <unsigned char*> calloc(n_rec * rounds + 1, 1)
    cdef unsigned char* syn = <unsigned char*> calloc(n_syn, 1)
    cdef Py_ssize_t t, i, f, nf, base
    cdef long long next_loc
    cdef int cyc, op, q0, q1, r, c, j, k, s, q, agree, prev, res
    if x == NULL or z == NULL or rec == NULL or syn == NULL:
        free(x); free(z); free(rec); free(syn)
        raise MemoryError()
    with nogil:
        for t in range(n_trials):
            f = fptr[t]
            nf = fptr[t + 1]
            if f == nf:
                out[t] = 0
                continue
            memset(x, 0, n_qubits)
            memset(z, 0, n_qubits)
            prev = 0
            for cyc in range(n_cycles):
                base = cyc * n_ops
                next_loc = floc[f] - base if f < nf else -1
                for i in range(n_ops):
                    op = ops[i, 0]
                    q0 = ops[i, 1]
                    q1 = ops[i, 2]
                    r = ops[i, 3]
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
                        c = fcode[f]
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
                        next_loc = floc[f] - base if f < nf else -1
                for j in range(n_syn):
                    s = 0
                    for k in range(stab_ptr[j], stab_ptr[j + 1]):
                        s ^= rec[stab_idx[k]]
                    syn[j] = s
                agree = 1
                for k in range(1, rounds):
                    for j in range(4):
                        if syn[4 * k + j] != syn[j]:
                            agree = 0
                if agree:
                    q = corr_x[syn[0] | (syn[1] << 1)]
                    if q >= 0:
                        x[q] ^= 1
                    q = corr_z[syn[2] | (syn[3] << 1)]
                    if q >= 0:
                        z[q] ^= 1
                if relative and cyc == n_cycles - 2:
                    prev = _ideal_logical(x, z, corr_x, corr_z, zstab, xstab, fail_x, fail_z)
            res = prev ^ _ideal_logical(x, z, corr_x, corr_z, zstab, xstab, fail_x, fail_z)
            out[t] = res
    free(x)
    free(z)
    free(rec)
    free(syn)
