"""Kernel backend selection.

The compiled extension is used when it was built; otherwise the numpy/pure
Python fallback is imported. Set ``SUPERCRIT_PURE_PYTHON=1`` to force the
fallback (useful for benchmarking and for cross-checking the two backends).
"""
import os

from supercrit import _kernels_py as python_backend

compiled_backend = None
if not os.environ.get("SUPERCRIT_PURE_PYTHON"):
    try:
        from supercrit import _kernels as compiled_backend
    except ImportError:  # extension not built
        compiled_backend = None

_impl = compiled_backend if compiled_backend is not None else python_backend
BACKEND = "cython" if compiled_backend is not None else "python"

b_recursion = _impl.b_recursion
bound_scan = _impl.bound_scan
shell_indices = _impl.shell_indices
annulus_indices = _impl.annulus_indices

__all__ = [
    "BACKEND",
    "annulus_indices",
    "b_recursion",
    "bound_scan",
    "compiled_backend",
    "python_backend",
    "shell_indices",
]
