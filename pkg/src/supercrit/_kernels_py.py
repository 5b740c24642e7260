"""Pure-Python fallback for the compiled kernels in ``_kernels.pyx``."""
import math

import numpy as np


def b_recursion(a):
    a = np.ascontiguousarray(a, dtype=np.float64)
    out = np.empty(a.shape[0], dtype=np.float64)
    if a.shape[0] == 0:
        return out
    prev = 0.5 * float(a[0])
    out[0] = prev
    for i in range(1, a.shape[0]):
        prev = 0.5 * (prev + float(a[i]))
        out[i] = prev
    return out


def bound_scan(values, bounds, tol):
    values = np.asarray(values, dtype=np.float64)
    bounds = np.asarray(bounds, dtype=np.float64)
    if values.size == 0:
        return 0, -1, math.inf, -1, -math.inf
    slack = bounds - values
    bad = np.flatnonzero(slack < -tol)
    argmin = int(np.argmin(slack))
    first = int(bad[0]) if bad.size else -1
    return int(bad.size), first, float(slack[argmin]), argmin, float(slack.max())


def shell_indices(m):
    m = np.asarray(m, dtype=np.int64)
    out = np.zeros(m.shape[0], dtype=np.int64)
    pos = m > 0
    # frexp is exact for integers below 2**53: m = f * 2**e with f in [0.5, 1) gives bit_length e
    _, bits = np.frexp(m[pos].astype(np.float64))
    out[pos] = (bits.astype(np.int64) - 1) // 2 + 1
    return out


def annulus_indices(m):
    m = np.asarray(m, dtype=np.int64)
    q = np.floor(np.sqrt(m.astype(np.float64))).astype(np.int64)
    q -= (q * q > m)
    q += ((q + 1) * (q + 1) <= m)
    return q
