# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled hot kernels: coefficient-triangle recurrence and chain simulation.

Randomness is consumed step-major (one uniform per replication per step),
matching the NumPy fallback exactly so both backends generate identical
output from the same generator state.
"""
import numpy as np

cimport numpy as cnp
from libc.math cimport INFINITY, exp, log, log1p

cnp.import_array()

COMPILED = True


cdef inline double _logaddexp(double a, double b) noexcept nogil:
    if a == -INFINITY:
        return b
    if b == -INFINITY:
        return a
    if a < b:
        a, b = b, a
    return a + log1p(exp(b - a))


def gfc_row_log(int m, double sigma, double r):
    """Log of row m of the coefficient triangle; requires r >= 0 (positive
    recurrence, so the log-space update never cancels)."""
    cdef cnp.ndarray[cnp.float64_t, ndim=1] L = np.full(m + 1, -INFINITY)
    cdef double[:] lv = L
    cdef double logsig = log(sigma)
    cdef int i, k, top
    lv[0] = 0.0
    for i in range(m):
        top = i + 1
        # downward in k so lv[k-1] is still the previous row's entry
        lv[top] = logsig + lv[top - 1]
        for k in range(top - 1, 0, -1):
            lv[k] = _logaddexp(logsig + lv[k - 1], log(r + i - k * sigma) + lv[k])
        lv[0] = log(r + i) + lv[0]
    return L


def chain_counts_linear(object generator, int n0, int j0, int m, double sigma,
                        double theta, int nreps):
    """Chain with p_new = (theta + k*sigma)/(theta + n'); returns final k."""
    cdef cnp.ndarray[cnp.int64_t, ndim=1] k = np.full(nreps, j0, dtype=np.int64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] u = np.empty(nreps)
    cdef long long[:] kv = k
    cdef double[:] uv = u
    cdef int i, rep
    cdef double denom
    for i in range(m):
        denom = theta + n0 + i
        generator.random(out=u)
        for rep in range(nreps):
            if uv[rep] < (theta + kv[rep] * sigma) / denom:
                kv[rep] += 1
    return k


def chain_counts_table(object generator, cnp.ndarray[cnp.float64_t, ndim=2] ptable,
                       int j0, int nreps):
    """Chain driven by ptable[i, k - j0]; returns final k."""
    cdef int m = ptable.shape[0]
    cdef cnp.ndarray[cnp.int64_t, ndim=1] k = np.full(nreps, j0, dtype=np.int64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] u = np.empty(nreps)
    cdef long long[:] kv = k
    cdef double[:] uv = u
    cdef double[:, :] pv = ptable
    cdef int i, rep
    for i in range(m):
        generator.random(out=u)
        for rep in range(nreps):
            if uv[rep] < pv[i, kv[rep] - j0]:
                kv[rep] += 1
    return k
