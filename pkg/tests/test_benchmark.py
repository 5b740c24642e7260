import importlib.util
from pathlib import Path

from supercrit import kernels


def test_benchmark_runs_small(tmp_path):
    path = Path(__file__).resolve().parents[1] / "benchmarks" / "bench_kernels.py"
    spec = importlib.util.spec_from_file_location("bench_kernels", path)
    mod = importlib.util.module_from_spec(spec)
    spec.loader.exec_module(mod)
    rows = mod.main(["--size", "1000", "--repeat", "1", "--json", str(tmp_path / "b.json")])
    assert [r["kernel"] for r in rows] == ["b_recursion", "bound_scan", "shell_indices", "annulus_indices"]
    assert all(("cython" in r) == (kernels.compiled_backend is not None) for r in rows)
    assert (tmp_path / "b.json").exists()
