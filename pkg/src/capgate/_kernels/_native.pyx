# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled row kernels: per-replicate mean / sd / capability reductions.

These are the inner loops of the Monte Carlo and bootstrap paths. The
surface mirrors _fallback; the pure backend is used when this extension
is not built.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport sqrt, NAN

cnp.import_array()


def row_stats(x):
    """Per-row mean and sd (n-1 divisor) of a 2-D float64 array."""
    cdef cnp.ndarray[cnp.float64_t, ndim=2, mode="c"] xa = \
        np.ascontiguousarray(x, dtype=np.float64)
    cdef Py_ssize_t b = xa.shape[0], n = xa.shape[1]
    if n < 2:
        raise ValueError("row kernels need at least 2 columns")
    mean_arr = np.empty(b, dtype=np.float64)
    sd_arr = np.empty(b, dtype=np.float64)
    cdef double[::1] mean = mean_arr
    cdef double[::1] sd = sd_arr
    cdef double[:, ::1] xv = xa
    cdef Py_ssize_t i, j
    cdef double s, m, d, ss
    with nogil:
        for i in range(b):
            s = 0.0
            for j in range(n):
                s += xv[i, j]
            m = s / n
            ss = 0.0
            for j in range(n):
                d = xv[i, j] - m
                ss += d * d
            mean[i] = m
            sd[i] = sqrt(ss / (n - 1))
    return mean_arr, sd_arr


def row_capability(x, double lsl, double usl):
    """Per-row mean, sd (n-1 divisor), and plug-in capability index.

    Rows with zero dispersion get cpk = NaN; callers decide the policy.
    """
    cdef cnp.ndarray[cnp.float64_t, ndim=2, mode="c"] xa = \
        np.ascontiguousarray(x, dtype=np.float64)
    cdef Py_ssize_t b = xa.shape[0], n = xa.shape[1]
    if n < 2:
        raise ValueError("row kernels need at least 2 columns")
    mean_arr = np.empty(b, dtype=np.float64)
    sd_arr = np.empty(b, dtype=np.float64)
    cpk_arr = np.empty(b, dtype=np.float64)
    cdef double[::1] mean = mean_arr
    cdef double[::1] sd = sd_arr
    cdef double[::1] cpk = cpk_arr
    cdef double[:, ::1] xv = xa
    cdef Py_ssize_t i, j
    cdef double s, m, d, ss, sdev, upper, lower, num
    with nogil:
        for i in range(b):
            s = 0.0
            for j in range(n):
                s += xv[i, j]
            m = s / n
            ss = 0.0
            for j in range(n):
                d = xv[i, j] - m
                ss += d * d
            sdev = sqrt(ss / (n - 1))
            mean[i] = m
            sd[i] = sdev
            if sdev == 0.0:
                cpk[i] = NAN
            else:
                upper = usl - m
                lower = m - lsl
                num = upper if upper < lower else lower
                cpk[i] = num / (3.0 * sdev)
    return mean_arr, sd_arr, cpk_arr
