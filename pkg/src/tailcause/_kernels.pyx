# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled recursion for additive autoregressions.

Mirrors ``tailcause._fallback`` operation for operation, so both backends
return bit-identical arrays.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, pow

cnp.import_array()

DEF KIND_ZERO = 0
DEF KIND_LINEAR = 1
DEF KIND_SQRT = 2
DEF KIND_POWER_THRESHOLD = 3


cdef inline double _apply(long kind, double v, double p1, double p2) noexcept nogil:
    if kind == KIND_LINEAR:
        return p1 * v
    if kind == KIND_SQRT:
        if v > 0.0:
            return sqrt(v)
        return 0.0
    if kind == KIND_POWER_THRESHOLD:
        if v > p2:
            return pow(v, p1)
        return 0.0
    return 0.0


def additive_recursion(
    const double[:, ::1] noise,
    const long[::1] target,
    const long[::1] source,
    const long[::1] lag,
    const long[::1] kind,
    const double[::1] p1,
    const double[::1] p2,
):
    """Run ``out[t, c] = noise[t, c] + sum_m h_m(out[t - lag_m, source_m])``.

    Terms whose lag reaches before the start are skipped (zero initial state).
    """
    cdef Py_ssize_t T = noise.shape[0]
    cdef Py_ssize_t d = noise.shape[1]
    cdef Py_ssize_t M = target.shape[0]
    cdef Py_ssize_t t, c, m, s
    out_arr = np.empty((T, d), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    with nogil:
        for t in range(T):
            for c in range(d):
                out[t, c] = noise[t, c]
            for m in range(M):
                s = t - lag[m]
                if s < 0:
                    continue
                out[t, target[m]] = out[t, target[m]] + _apply(
                    kind[m], out[s, source[m]], p1[m], p2[m]
                )
    return out_arr
