import math

import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from supercrit import kernels
from supercrit._kernels_py import b_recursion as py_b


def test_backend_flag_matches_import():
    assert kernels.BACKEND == ("cython" if kernels.compiled_backend is not None else "python")


def test_b_recursion_small(backend):
    out = backend.b_recursion(np.array([1.0, 1.0, math.log2(3)]))
    assert out.tolist() == [0.5, 0.75, (3 + 4 * math.log2(3)) / 8]


def test_b_recursion_empty(backend):
    assert backend.b_recursion(np.zeros(0)).shape == (0,)


@settings(max_examples=50, deadline=None)
@given(arrays(np.float64, st.integers(1, 300), elements=st.floats(0, 50)))
def test_b_recursion_backends_agree(a):
    ref = py_b(a)
    if kernels.compiled_backend is not None:
        assert np.array_equal(kernels.compiled_backend.b_recursion(a), ref)
    # b stays within [min a / 2, max a]
    assert np.all(ref <= a.max() + 1e-12)


@settings(max_examples=50, deadline=None)
@given(arrays(np.float64, st.integers(1, 200), elements=st.floats(-10, 10)),
       st.floats(0, 1e-3))
def test_bound_scan_backends_agree(vals, tol):
    bounds = np.zeros_like(vals)
    ref = kernels.python_backend.bound_scan(vals, bounds, tol)
    count, first, lo, argmin, hi = ref
    slack = -vals
    assert count == int(np.sum(slack < -tol))
    assert lo == slack.min() and hi == slack.max()
    if kernels.compiled_backend is not None:
        assert kernels.compiled_backend.bound_scan(vals, bounds, tol) == ref


def test_bound_scan_reports_first_violation(backend):
    vals = np.array([0.0, 2.0, 0.5, 3.0])
    bounds = np.ones(4)
    count, first, lo, argmin, hi = backend.bound_scan(vals, bounds, 0.0)
    assert (count, first, argmin) == (2, 1, 3)
    assert (lo, hi) == (-2.0, 1.0)


@settings(max_examples=50, deadline=None)
@given(arrays(np.int64, st.integers(1, 300), elements=st.integers(0, 2 ** 40)))
def test_index_kernels_exact(m):
    shells = kernels.python_backend.shell_indices(m)
    ann = kernels.python_backend.annulus_indices(m)
    for mi, j, n in zip(m.tolist(), shells.tolist(), ann.tolist()):
        assert n == math.isqrt(mi)
        if mi == 0:
            assert j == 0
        else:
            # 2**(j-1) <= sqrt(mi) < 2**j
            assert 4 ** (j - 1) <= mi < 4 ** j
    if kernels.compiled_backend is not None:
        assert np.array_equal(kernels.compiled_backend.shell_indices(m), shells)
        assert np.array_equal(kernels.compiled_backend.annulus_indices(m), ann)


def test_index_kernels_at_powers(backend):
    m = np.array([1, 3, 4, 15, 16, 63, 64, 2 ** 52, 2 ** 52 - 1], dtype=np.int64)
    assert backend.shell_indices(m).tolist() == [1, 1, 2, 2, 3, 3, 4, 27, 26]
    assert backend.annulus_indices(m).tolist() == [1, 1, 2, 3, 4, 7, 8, 2 ** 26, 2 ** 26 - 1]
