import itertools
import math

import numpy as np
import pytest

from supercrit import harness as hz
from supercrit import spectral as sp
from supercrit.solver import SolverConfig, run
from supercrit.weights import b, j0

TWO_PI = 2 * math.pi


def rand(d=3, N=16, seed=0, **kw):
    return sp.random_solenoidal(d, N, seed=seed, **kw)


def unit_energy_mode(d, N, xi):
    f = sp.single_mode(d, N, xi)
    return f * (1.0 / sp.l2_norm(f))


@pytest.fixture(scope="module")
def tg3d_snapshot():
    return run(SolverConfig(d=3, N=32, nu=0.05, dt=0.01, T=0.1, initial="tg3d")).final


# --- nonlinear-term identity -----------------------------------------------------------

def test_identity_taylor_green_2d():
    rep = hz.check_energy_identity(sp.taylor_green_2d(32), 3)
    assert rep.passed and len(rep.rows) == 4
    assert rep.max_relative_residual() <= 1e-11


@pytest.mark.parametrize("k", [2, 3, 4.5, 5, 8])
def test_identity_random_fields(k):
    for seed in range(3):
        rep = hz.check_energy_identity(rand(3, 16, seed=seed, kmax=7), k, f"r{seed}")
        assert rep.passed, rep.failures()


def test_identity_beyond_bandwidth_all_zero():
    u = rand(2, 32, seed=1, kmax=6)
    rep = hz.check_energy_identity(u, 40)
    assert all(r["lhs"] == 0 and r["rhs"] == 0 for r in rep.rows)


def test_identity_zero_field():
    assert hz.check_energy_identity(sp.zeros(3, 8), 2).passed


def test_identity_detects_wrong_split():
    # dropping one of the three terms must break the identity on a generic field
    u = rand(3, 16, seed=2, kmax=7)
    k = 4
    hi, lo = sp.high_pass(u, k), sp.low_pass(u, k)
    band, half = sp.band_pass(u, k / 2, k), sp.low_pass(u, k / 2)
    full = -sp.trilinear(u, u, hi)
    partial = -sp.trilinear(lo, band, hi) - sp.trilinear(band, half, hi)
    assert abs(full - partial) > 1e-6 * abs(full)


def test_rate_by_annulus_suffix_sums():
    u = rand(3, 16, seed=3, kmax=7)
    rates = hz.annulus_rates(u)
    for k in range(1, len(rates)):
        assert math.fsum(rates[k:]) == pytest.approx(hz.high_frequency_rate(u, k), rel=1e-9, abs=1e-12)
    assert abs(math.fsum(rates)) <= 1e-12 * hz._scale(u)


def test_rate_vanishes_beyond_bandwidth():
    u = rand(3, 16, seed=3, kmax=7)
    assert [hz.high_frequency_rate(u, k) for k in (15, 20, 30)] == [0.0, 0.0, 0.0]


def test_finite_difference_rate_converges():
    nu = 0.05
    errs = []
    for dt in (0.01, 0.005):
        cfg = SolverConfig(d=3, N=16, nu=nu, dt=dt, T=4 * dt, initial="random", seed=4, kmax=6, trace_every=1)
        states = run(cfg, keep_states=True).states
        _, fd, exact = hz.finite_difference_rate(states, 3, nu)[1]
        errs.append(abs(fd - exact))
    assert errs[0] / errs[1] > 3.0


# --- sup-norm chain -------------------------------------------------------------------

def shell_field(d, N, j):
    r2 = sp.radius_squared(d, N)
    mask = (r2 >= 4 ** (j - 1)) & (r2 < 4 ** j) & ~sp.nyquist_mask(d, N)
    c = np.zeros((d,) + (N,) * d, dtype=np.complex128)
    c[0][mask] = 1.0
    return sp.SpectralField(c)


@pytest.mark.parametrize("d,N", [(2, 32), (3, 16)])
def test_linf_single_shell_constant_is_lattice_count(d, N):
    f = shell_field(d, N, 2)
    rep = hz.check_linf_chain(f, 8)
    assert rep.passed
    (row,) = [r for r in rep.rows if r["term"] == "shell_l1_vs_l2"]
    count = sp.shell_lattice_counts(d, N)[2]
    assert row["lhs"] == pytest.approx(math.sqrt(count) / 2 ** d, rel=1e-14)
    assert row["rhs"] == pytest.approx(row["lhs"], rel=1e-14)


def test_linf_zero_field():
    rep = hz.check_linf_chain(sp.zeros(3, 8), 2)
    assert rep.passed and all(r["lhs"] == 0 for r in rep.rows)
    with pytest.raises(ValueError):
        hz.check_linf_chain(sp.zeros(3, 8), 0.5)


def test_lattice_constant_bounds():
    for d, N in ((2, 32), (3, 16)):
        c0 = hz.lattice_shell_constant(d, N)
        counts = sp.shell_lattice_counts(d, N)
        assert c0 == max(math.sqrt(counts[j] / 2 ** (d * j)) for j in range(1, int(math.log2(N // 2)) + 1))
        assert c0 <= math.sqrt(hz.unit_ball_volume(d) * 2 ** d)


# --- high-frequency inequality -----------------------------------------------------------

def test_high_frequency_zero_field():
    reps = hz.check_high_frequency_inequality([sp.zeros(3, 8)], 2)
    assert all(r.passed for r in reps.values())
    assert reps["x1_form"].constants["C1"] == 0.0


def test_bernstein_tight_on_half_radius_mode():
    f = sp.single_mode(2, 32, (3, 4))
    rep = hz.check_high_frequency_inequality([f], 10)["bernstein"]
    (row,) = rep.rows
    assert row["lhs"] == pytest.approx(row["rhs"], rel=1e-14)
    assert rep.passed


def test_high_frequency_taylor_green_3d(tg3d_snapshot):
    for k in (2, 4, 8):
        reps = hz.check_high_frequency_inequality([tg3d_snapshot], k, ["tg3d"])
        assert reps["holder"].passed and reps["bernstein"].passed and reps["x1_form"].passed
        assert math.isfinite(reps["x1_form"].constants["C1"])


def test_band_gradient_sharper_than_stated():
    u = rand(3, 16, seed=6, kmax=7)
    rep = hz.check_high_frequency_inequality([u], 6)["band_gradient"]
    (row,) = rep.rows
    assert row["lhs"] <= row["lattice_bound"] <= row["rhs"] * (1 + 1e-12)


# --- superposition -------------------------------------------------------------------------

def test_superposition_single_annulus():
    f = unit_energy_mode(2, 16, (2, 0))
    rep = hz.check_superposition(f, 1.0)
    value = next(r for r in rep.rows if r["term"] == "value")
    assert value["lhs"] == pytest.approx(3.0, rel=1e-14) and value["rhs"] == pytest.approx(3.0, rel=1e-14)
    assert rep.passed


def test_superposition_empty_field():
    rep = hz.check_superposition(sp.zeros(2, 8), 1.0)
    assert rep.passed and all(r["lhs"] == r["rhs"] == 0 for r in rep.rows)


@pytest.mark.parametrize("s", [0.5, 1.0, 2.0])
def test_superposition_against_double_loop(s):
    f = rand(2, 16, seed=int(4 * s), kmax=7)
    rep = hz.check_superposition(f, s)
    assert rep.passed
    N = f.N
    mode = {}
    for idx in itertools.product(range(N), repeat=2):
        xi = [i if i < N // 2 else i - N for i in idx]
        m = xi[0] ** 2 + xi[1] ** 2
        mode[m] = mode.get(m, 0.0) + TWO_PI ** 2 * float(np.sum(np.abs(f.coeffs[(slice(None),) + idx]) ** 2))
    K = rep.notes["truncation_index"]
    oracle = math.fsum(k ** s * e for k in range(1, K + 1) for m, e in mode.items() if m >= k * k)
    goracle = math.fsum(k ** s * m * e for k in range(1, K + 1) for m, e in mode.items() if m >= k * k)
    value = next(r for r in rep.rows if r["term"] == "value")
    grad = next(r for r in rep.rows if r["term"] == "gradient")
    assert value["lhs"] == pytest.approx(oracle, rel=1e-12) and value["rhs"] == pytest.approx(oracle, rel=1e-12)
    assert grad["lhs"] == pytest.approx(goracle, rel=1e-12) and grad["rhs"] == pytest.approx(goracle, rel=1e-12)


# --- accumulated inequality -----------------------------------------------------------------

def test_accumulated_zero_field():
    reps = hz.check_accumulated_inequality([sp.zeros(3, 8)], 0.5)
    assert reps["accumulated"].passed and reps["accumulated"].constants["C2"] == 0.0


def test_accumulated_single_annulus():
    n, s = 2, 0.5
    f = unit_energy_mode(3, 16, (2, 0, 0))
    G = sp.grad_norm_sq(f)
    assert G == pytest.approx(4.0)
    reps = hz.check_accumulated_inequality([f], s)
    (row,) = reps["accumulated"].rows
    assert abs(row["lhs"]) <= 1e-14  # a single Fourier pair does not interact with itself
    assert row["bracket"] == pytest.approx(G * (1 + n ** (s + 1)), rel=1e-14)
    steps = hz.cutoff_sum_chain(f, s)
    direct = G * math.fsum(b(j0(k)) * k ** s for k in range(1, 2 * n + 1))
    paired = G * (1 + math.fsum(b(j0(2 * k)) * (2 * k) ** s + b(j0(2 * k + 1)) * (2 * k + 1) ** s
                                for k in range(1, n + 1)))
    coarse = G * (1 + (3 * n) ** s * math.fsum(b(j0(2 * k)) + b(j0(2 * k + 1)) for k in range(1, n + 1)))
    assert steps["direct"] == pytest.approx(direct, rel=1e-13)
    assert steps["pairs"] == pytest.approx(paired, rel=1e-13) and steps["annuli"] == pytest.approx(paired, rel=1e-13)
    assert steps["coarse"] == pytest.approx(coarse, rel=1e-13)
    assert reps["chain"].passed


def test_accumulated_on_trace():
    cfg = SolverConfig(d=3, N=16, nu=0.05, dt=0.01, T=0.1, initial="random", seed=3, kmax=6, trace_every=5)
    states = run(cfg, keep_states=True).states
    reps = hz.check_accumulated_inequality(states, 0.5)
    assert reps["accumulated"].passed and reps["chain"].passed
    assert 0 < reps["accumulated"].constants["C2"] < math.inf


# --- reports --------------------------------------------------------------------------------

def test_report_semantics():
    eq = hz.InequalityReport("x", "equality", 1e-3)
    eq.add(1.0, 1.0005, 1.0)
    assert eq.passed
    eq.add(1.0, 1.01, 1.0)
    assert not eq.passed and len(eq.failures()) == 1
    ineq = hz.InequalityReport("y", "inequality", 0.0)
    ineq.add(1.0, 2.0)
    assert ineq.passed
    ineq.add(2.0, 1.0)
    assert not ineq.passed
    ineq.add(float("nan"), 1.0)
    assert len(ineq.failures()) == 2
    with pytest.raises(ValueError):
        eq.merge(ineq)
    header, rows = ineq.csv_rows()
    assert header == ["lhs", "rhs", "residual", "scale"] and len(rows) == 3
    assert ineq.to_dict()["pass"] is False


# --- sweep -------------------------------------------------------------------------------------

def test_sweep_single_nu():
    base = SolverConfig(d=2, N=16, nu=0.1, dt=0.01, T=0.1, trace_every=5)
    rep = hz.nu_sweep(base, [0.1], [0.5])
    assert rep.distances == [] and rep.nus == [0.1]
    assert rep.verdicts[0.5] in hz.VERDICTS
    data = rep.to_dict()
    assert set(data["verdict"].values()) <= set(hz.VERDICTS)


def test_sweep_taylor_green_bounded():
    base = SolverConfig(d=2, N=16, nu=0.1, dt=0.01, T=0.2, trace_every=5)
    rep = hz.nu_sweep(base, [0.0, 0.1, 0.01], [0.5, 1.0])
    assert rep.nus == [0.1, 0.01, 0.0]
    for s in (0.5, 1.0):
        assert max(rep.ratios(s)) <= 1 + 1e-12
        assert rep.verdicts[s] == "bounded-on-grid"
    D = np.array(rep.distances)
    assert np.allclose(D, D.T) and np.all(np.diag(D) == 0)


def test_sweep_parallel_matches_serial():
    base = SolverConfig(d=2, N=16, dt=0.01, T=0.05, initial="random", seed=1, kmax=6, trace_every=1)
    a = hz.nu_sweep(base, [0.1, 0.05], [0.5], jobs=1).to_dict()
    b_ = hz.nu_sweep(base, [0.1, 0.05], [0.5], jobs=2).to_dict()
    assert a == b_


def test_sweep_validation():
    base = SolverConfig(d=2, N=16, dt=0.01, T=0.05)
    with pytest.raises(ValueError):
        hz.nu_sweep(base, [])
    with pytest.raises(ValueError):
        hz.nu_sweep(base, [-0.1])


def test_sweep_records_halted_runs():
    base = SolverConfig(d=2, N=16, dt=0.05, T=1.0, initial="random", seed=0, kmax=7, amplitude=1e150, cfl=1e300,
                        trace_every=1)
    rep = hz.nu_sweep(base, [0.0, 0.001], [0.5])
    assert all(rep.halted) and rep.verdicts[0.5] == "inconclusive"


def test_verdict_growth():
    assert hz._verdict([1.0, 1.2, 1.5], [False] * 3, 0.05) == "growth-detected"
    assert hz._verdict([1.0, 1.0, 1.0], [False] * 3, 0.05) == "bounded-on-grid"
    assert hz._verdict([1.0, math.nan], [False] * 2, 0.05) == "inconclusive"


# --- pinned constants ----------------------------------------------------------------------------

def test_measured_constants_match_baselines(ensemble, baselines):
    consts = hz.measure_constants(ensemble)
    assert consts["holder_pass"] and consts["chain_pass"]
    assert consts["C1"] == pytest.approx(baselines["C1"], rel=0.01)
    assert consts["C2"] == pytest.approx(baselines["C2"], rel=0.01)
    for key in hz.LINF_KEYS:
        assert consts[key] == pytest.approx(baselines["ensemble_linf"][key], rel=0.01)


def test_linf_fifty_field_constants(baselines):
    consts, ok = hz.measure_linf_constants(hz.linf_ensemble())
    assert ok
    for key in hz.LINF_KEYS:
        assert consts[key] == pytest.approx(baselines["linf50"][key], rel=0.01)
