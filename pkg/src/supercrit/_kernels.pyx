# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled inner loops. Signatures mirror :mod:`supercrit._kernels_py`."""
import numpy as np

cimport numpy as cnp
from libc.math cimport sqrt

cnp.import_array()


cdef extern from *:
    int __builtin_clzll(unsigned long long) nogil


def b_recursion(const double[::1] a):
    """Averaged weights b[0..n-1] from a[0..n-1] (1-based index j = i + 1)."""
    cdef Py_ssize_t n = a.shape[0], i
    out = np.empty(n, dtype=np.float64)
    cdef double[::1] b = out
    if n == 0:
        return out
    with nogil:
        b[0] = 0.5 * a[0]
        for i in range(1, n):
            b[i] = 0.5 * (b[i - 1] + a[i])
    return out


def bound_scan(const double[::1] values, const double[::1] bounds, double tol):
    """Return (violations, first_violation, min_slack, argmin_slack, max_slack)."""
    cdef Py_ssize_t n = values.shape[0], i
    cdef Py_ssize_t count = 0, first = -1, argmin = -1
    cdef double slack, lo = np.inf, hi = -np.inf
    with nogil:
        for i in range(n):
            slack = bounds[i] - values[i]
            if slack < -tol:
                count += 1
                if first < 0:
                    first = i
            if slack < lo:
                lo = slack
                argmin = i
            if slack > hi:
                hi = slack
    return int(count), int(first), float(lo), int(argmin), float(hi)


def shell_indices(const long long[::1] m):
    """Dyadic shell index j with 4**(j-1) <= m < 4**j; 0 where m == 0."""
    cdef Py_ssize_t n = m.shape[0], i
    out = np.zeros(n, dtype=np.int64)
    cdef long long[::1] j = out
    cdef int bits
    with nogil:
        for i in range(n):
            if m[i] > 0:
                bits = 64 - __builtin_clzll(<unsigned long long>m[i])
                j[i] = (bits - 1) // 2 + 1
    return out


def annulus_indices(const long long[::1] m):
    """Exact floor(sqrt(m)) for nonnegative integers m."""
    cdef Py_ssize_t n = m.shape[0], i
    out = np.empty(n, dtype=np.int64)
    cdef long long[::1] r = out
    cdef long long q
    with nogil:
        for i in range(n):
            q = <long long>sqrt(<double>m[i])
            while q * q > m[i]:
                q -= 1
            while (q + 1) * (q + 1) <= m[i]:
                q += 1
            r[i] = q
    return out
