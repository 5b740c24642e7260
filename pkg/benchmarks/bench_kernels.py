"""Time the compiled kernels against the pure-Python fallback.

    python benchmarks/bench_kernels.py [--size 1000000] [--repeat 5] [--json out.json]
"""
import argparse
import json
import timeit

import numpy as np

from supercrit import kernels
from supercrit.weights import a_array


def cases(size: int):
    a = a_array(size)
    b = kernels.python_backend.b_recursion(a)
    bounds = np.full(size, 16.0)
    m = np.random.default_rng(0).integers(0, 3 * 256 ** 2, size=size, dtype=np.int64)
    return {
        "b_recursion": lambda be: be.b_recursion(a),
        "bound_scan": lambda be: be.bound_scan(b, bounds, 1e-10),
        "shell_indices": lambda be: be.shell_indices(m),
        "annulus_indices": lambda be: be.annulus_indices(m),
    }


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--size", type=int, default=1_000_000)
    parser.add_argument("--repeat", type=int, default=5)
    parser.add_argument("--json")
    args = parser.parse_args(argv)
    backends = {"python": kernels.python_backend}
    if kernels.compiled_backend is not None:
        backends["cython"] = kernels.compiled_backend
    rows = []
    for name, fn in cases(args.size).items():
        row = {"kernel": name, "size": args.size}
        for label, be in backends.items():
            row[label] = min(timeit.repeat(lambda: fn(be), number=1, repeat=args.repeat))
        if "cython" in row:
            row["speedup"] = row["python"] / row["cython"]
        rows.append(row)
    print(f"{'kernel':<16} {'python [s]':>11} {'cython [s]':>11} {'speedup':>8}")
    for r in rows:
        cy = f"{r['cython']:.5f}" if "cython" in r else "n/a"
        sp = f"{r['speedup']:.1f}x" if "speedup" in r else "n/a"
        print(f"{r['kernel']:<16} {r['python']:>11.5f} {cy:>11} {sp:>8}")
    if args.json:
        with open(args.json, "w") as fh:
            json.dump(rows, fh, indent=2)
    return rows


if __name__ == "__main__":
    main()
