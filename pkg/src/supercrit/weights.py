"""Sparse logarithmic weight sequences and the counting facts built on them.

The weight ``a(j)`` equals ``log2 j`` on the narrow windows
``|j - 2**(2**k)| <= k`` (k = 1, 2, ...) and 1 elsewhere; ``b(j)`` is its
geometrically discounted running average ``2**(-j-1) * sum_{i<=j} 2**i a(i)``.
Everything here is exact integer window arithmetic plus double-precision
averages.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterator

import numpy as np

from supercrit import kernels

BOUND_TOL = 1e-10


def _check_positive_int(name: str, value: int, minimum: int = 1) -> int:
    if isinstance(value, bool) or not isinstance(value, (int, np.integer)):
        raise TypeError(f"{name} must be an integer, got {type(value).__name__}")
    value = int(value)
    if value < minimum:
        raise ValueError(f"{name} must be >= {minimum}, got {value}")
    return value


def window_centers(limit: int) -> Iterator[tuple[int, int]]:
    """Yield ``(k, 2**(2**k))`` for every window whose left end ``c - k`` is <= limit."""
    k = 1
    while True:
        center = 1 << (1 << k)
        if center - k > limit:
            return
        yield k, center
        k += 1


def window_index(j: int) -> int | None:
    """Return k if ``|j - 2**(2**k)| <= k`` for some k >= 1, else None.

    Windows for distinct k are disjoint (their centers grow doubly
    exponentially), so the answer is unique. Works for arbitrary-size ints.
    """
    j = int(j)
    if j < 3:
        return None
    for k, center in window_centers(j):
        if abs(j - center) <= k:
            return k
    return None


def in_count_window(j: int) -> int | None:
    """Return k if ``2**(2**k) - k <= j <= 2**(2**k) + 2k``, the wider right-skewed window."""
    j = int(j)
    if j < 3:
        return None
    for k, center in window_centers(j):
        if center - k <= j <= center + 2 * k:
            return k
    return None


def a(j: int) -> float:
    """Sparse log weight on the natural numbers (rejects j < 1)."""
    return extended_a(_check_positive_int("j", j))


def extended_a(j: int) -> float:
    """``a`` extended to all integers by ``a(j) = 1`` for j <= 0, as the X1 norm needs."""
    if isinstance(j, bool) or not isinstance(j, (int, np.integer)):
        raise TypeError("a(j) needs an integer index")
    j = int(j)
    if j <= 0:
        return 1.0
    return math.log2(j) if window_index(j) is not None else 1.0


def a_array(max_index: int) -> np.ndarray:
    """Vector ``[a(1), ..., a(max_index)]`` built by enumerating windows."""
    out = np.ones(max_index, dtype=np.float64)
    for k, center in window_centers(max_index):
        lo, hi = max(center - k, 1), min(center + k, max_index)
        idx = np.arange(lo, hi + 1)
        out[idx - 1] = np.log2(idx.astype(np.float64))
    return out


def count_window_mask(max_index: int) -> np.ndarray:
    """Boolean mask (index 0 <-> j = 1) of membership in the wider windows."""
    mask = np.zeros(max_index, dtype=bool)
    for k, center in window_centers(max_index):
        lo, hi = center - k, min(center + 2 * k, max_index)
        mask[lo - 1:hi] = True
    return mask


@dataclass(frozen=True)
class WeightTable:
    """Memoized ``a``, ``b`` and window membership for ``1 <= j <= max_index``."""

    max_index: int
    a_values: np.ndarray = field(repr=False)
    b_values: np.ndarray = field(repr=False)
    window_index: np.ndarray = field(repr=False)

    @classmethod
    def build(cls, max_index: int) -> "WeightTable":
        max_index = _check_positive_int("max_index", max_index)
        av = a_array(max_index)
        bv = np.asarray(kernels.b_recursion(av))
        win = np.zeros(max_index, dtype=np.int64)
        for k, center in window_centers(max_index):
            win[max(center - k, 1) - 1:min(center + k, max_index)] = k
        for arr in (av, bv, win):
            arr.setflags(write=False)
        return cls(max_index, av, bv, win)

    def _idx(self, j: int) -> int:
        j = _check_positive_int("j", j)
        if j > self.max_index:
            raise IndexError(f"j={j} beyond materialized range {self.max_index}")
        return j - 1

    def a(self, j: int) -> float:
        return float(self.a_values[self._idx(j)])

    def b(self, j: int) -> float:
        return float(self.b_values[self._idx(j)])

    def window(self, j: int) -> int | None:
        k = int(self.window_index[self._idx(j)])
        return k or None


@lru_cache(maxsize=8)
def _table(size: int) -> WeightTable:
    return WeightTable.build(size)


def table_covering(j: int) -> WeightTable:
    """Shared table with at least ``j`` entries (sizes rounded up to powers of two)."""
    size = max(64, 1 << (int(j) - 1).bit_length())
    return _table(size)


def b(j: int) -> float:
    """Averaged weight via the recursion ``b(j+1) = (b(j) + a(j+1)) / 2``, ``b(1) = a(1)/2``."""
    j = _check_positive_int("j", j)
    return table_covering(j).b(j)


def b_direct(j: int) -> float:
    """``b(j)`` straight from the partial sum, scaled to avoid overflow of ``2**i``."""
    j = _check_positive_int("j", j)
    i = np.arange(1, j + 1)
    terms = np.ldexp(a_array(j), (i - j - 1).astype(np.int64))
    return math.fsum(terms.tolist())


def j0(k: float) -> int:
    """``ceil(log2 k) + 1`` computed exactly from the binary exponent of k."""
    if isinstance(k, bool):
        raise TypeError("k must be a number")
    if isinstance(k, (int, np.integer)):
        k = int(k)
        if k < 1:
            raise ValueError(f"k must be >= 1, got {k}")
        return (k - 1).bit_length() + 1
    k = float(k)
    if not k >= 1.0 or math.isinf(k):
        raise ValueError(f"k must be a finite real >= 1, got {k}")
    mant, exp = math.frexp(k)
    return exp if mant == 0.5 else exp + 1


def s_window_set(n: int) -> set[int]:
    """All l <= n lying in some window ``[2**(2**k) - k, 2**(2**k) + 2k]``."""
    n = _check_positive_int("n", n)
    out: set[int] = set()
    for k, center in window_centers(n):
        out.update(range(center - k, min(center + 2 * k, n) + 1))
    return out


def window_count_bound(n: int | np.ndarray):
    """``(3 L + 5) L / 2`` with ``L = log2 log2 n``."""
    ll = np.log2(np.log2(np.asarray(n, dtype=np.float64)))
    return (3.0 * ll + 5.0) * ll / 2.0


@dataclass
class BoundReport:
    """Outcome of an exhaustive bound scan."""

    name: str
    checked_from: int
    checked_to: int
    violations: list[int]
    min_slack: float
    min_slack_at: int
    max_slack: float
    tol: float
    extra: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return not self.violations

    def to_dict(self) -> dict:
        return {
            "pass": self.passed,
            "checked": [self.checked_from, self.checked_to],
            "violations": self.violations[:100],
            "n_violations": len(self.violations),
            "min_slack": self.min_slack,
            "min_slack_at": self.min_slack_at,
            "max_slack": self.max_slack,
            "tol": self.tol,
            **self.extra,
        }


def verify_b_bound(j_max: int, tol: float = BOUND_TOL) -> BoundReport:
    """Check ``b(j) <= log2 j`` on the wide windows and ``b(j) <= 2`` elsewhere, j <= j_max."""
    j_max = _check_positive_int("j_max", j_max, minimum=4)
    table = table_covering(j_max)
    bv = np.ascontiguousarray(table.b_values[:j_max])
    js = np.arange(1, j_max + 1, dtype=np.float64)
    bounds = np.where(count_window_mask(j_max), np.log2(js), 2.0)
    count, first, lo, argmin, hi = kernels.bound_scan(bv, np.ascontiguousarray(bounds), tol)
    violations = []
    if count:
        violations = (np.flatnonzero(bounds - bv < -tol) + 1).tolist()
    return BoundReport("b_bound", 1, j_max, violations, lo, argmin + 1, hi, tol,
                       extra={"min_b": float(bv.min()), "max_b": float(bv.max())})


def window_counts(n_max: int) -> np.ndarray:
    """``|S(n)|`` for n = 1..n_max as an int array (index 0 <-> n = 1)."""
    return np.cumsum(count_window_mask(n_max), dtype=np.int64)


def verify_window_count_bound(n_max: int, tol: float = 1e-9) -> BoundReport:
    """Check ``|S(n)| <= (3 L + 5) L / 2`` for 4 <= n <= n_max, reporting max ratio."""
    n_max = _check_positive_int("n_max", n_max, minimum=4)
    counts = window_counts(n_max)[3:].astype(np.float64)
    ns = np.arange(4, n_max + 1)
    bounds = window_count_bound(ns)
    count, first, lo, argmin, hi = kernels.bound_scan(
        np.ascontiguousarray(counts), np.ascontiguousarray(bounds), tol)
    violations = []
    if count:
        violations = (np.flatnonzero(bounds - counts < -tol) + 4).tolist()
    ratio = counts / bounds
    r = int(np.argmax(ratio))
    return BoundReport("window_count_bound", 4, n_max, violations, lo, argmin + 4, hi, tol,
                       extra={"max_ratio": float(ratio[r]), "max_ratio_at": r + 4})


@dataclass
class AveragingReport:
    """Running sums of ``b(j0(2k))`` and ``b(j0(2k+1))`` against ``3 n``."""

    n_max: int
    n0: int | None
    even_sums: np.ndarray = field(repr=False)
    odd_sums: np.ndarray = field(repr=False)

    @property
    def n(self) -> np.ndarray:
        return np.arange(1, self.n_max + 1)

    @property
    def even_margin(self) -> np.ndarray:
        return 3.0 * self.n - self.even_sums

    @property
    def odd_margin(self) -> np.ndarray:
        return 3.0 * self.n - self.odd_sums

    @property
    def found(self) -> bool:
        return self.n0 is not None

    def summary(self) -> dict:
        em, om = self.even_margin, self.odd_margin
        return {
            "n0": self.n0,
            "found": self.found,
            "n_max": self.n_max,
            "min_even_margin": float(em.min()),
            "min_odd_margin": float(om.min()),
            "max_even_mean": float((self.even_sums / self.n).max()),
            "max_odd_mean": float((self.odd_sums / self.n).max()),
            "message": None if self.found else f"no n0 found <= {self.n_max}",
        }

    def write_csv(self, path) -> None:
        data = np.column_stack([self.n, self.even_sums, self.odd_sums, self.even_margin, self.odd_margin])
        np.savetxt(path, data, delimiter=",", fmt=["%d", "%.17g", "%.17g", "%.17g", "%.17g"],
                   header="n,even_sum,odd_sum,even_margin,odd_margin", comments="")


def _j0_int_array(k: np.ndarray) -> np.ndarray:
    # ceil(log2 k) + 1 == bit_length(k - 1) + 1 for integer k >= 1
    _, bits = np.frexp((k - 1).astype(np.float64))
    return bits.astype(np.int64) + 1


def averaging_sums(n_max: int) -> AveragingReport:
    """Smallest n0 with both running sums <= 3n on all of [n0, n_max]."""
    n_max = _check_positive_int("n_max", n_max)
    k = np.arange(1, n_max + 1, dtype=np.int64)
    je, jo = _j0_int_array(2 * k), _j0_int_array(2 * k + 1)
    table = table_covering(int(max(je.max(), jo.max())))
    bv = table.b_values
    even = np.cumsum(bv[je - 1])
    odd = np.cumsum(bv[jo - 1])
    bad = (even > 3.0 * k) | (odd > 3.0 * k)
    if not bad.any():
        n0 = 1
    elif bad[-1]:
        n0 = None
    else:
        n0 = int(np.flatnonzero(bad)[-1]) + 2
    return AveragingReport(n_max, n0, even, odd)


def power_sum_bounds(n: int, s: float) -> tuple[float, float, float]:
    """``(n**(s+1)/(s+1), sum_{k<=n} k**s, (n+1)**(s+1)/(s+1))``; raises if the bracket fails."""
    n = _check_positive_int("n", n)
    s = float(s)
    if not s >= 0.0:
        raise ValueError(f"s must be >= 0, got {s}")
    total = math.fsum(float(k) ** s for k in range(1, n + 1))
    lower = n ** (s + 1.0) / (s + 1.0)
    upper = (n + 1) ** (s + 1.0) / (s + 1.0)
    if not lower <= total <= upper:
        raise ArithmeticError(f"power-sum bracket fails at n={n}, s={s}: {lower} <= {total} <= {upper}")
    return lower, total, upper
