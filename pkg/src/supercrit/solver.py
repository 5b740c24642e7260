"""Integrating-factor RK4 pseudospectral Navier-Stokes on the periodic box.

The viscous term is applied exactly through ``exp(-nu |xi|^2 t)``; only the
projected, dealiased convection term goes through the Runge-Kutta stages.
Time integrals of the dissipation (and of the higher-order norms tracked for
the viscosity sweep) are integrated with the same RK4 stages, so the energy
balance closes to the order of the scheme.
"""
from __future__ import annotations

import csv
import hashlib
import json
import logging
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from supercrit import spectral as sp
from supercrit.shells import ShellProfile, x1_norm

log = logging.getLogger(__name__)

PRESETS = ("tg2d", "tg3d", "random")


class ConfigError(ValueError):
    """Invalid solver configuration (schema or physics precondition)."""


class BlowUpError(RuntimeError):
    """Non-finite values appeared during time stepping."""

    def __init__(self, message: str, time: float, step: int):
        super().__init__(message)
        self.time = time
        self.step = step


def default_s_list(d: int) -> list[float]:
    return sorted({-1.0 + d / 2.0, (d - 2) / 2.0 + 0.5, 1.0})


@dataclass
class SolverConfig:
    d: int = 2
    N: int = 64
    nu: float = 0.01
    dt: float = 1e-3
    T: float = 1.0
    initial: str = "tg2d"
    seed: int = 0
    amplitude: float = 1.0
    kmax: float | None = None
    slope: float = 1.0
    trace_every: int = 10
    s_list: list[float] | None = None
    k_list: list[float] = field(default_factory=lambda: [2.0, 4.0, 8.0])
    cfl: float = 2.0
    profile_every: int = 0
    snapshot_every: int = 0

    def __post_init__(self):
        if self.s_list is None:
            self.s_list = default_s_list(self.d)
        self.s_list = [float(s) for s in self.s_list]
        self.k_list = [float(k) for k in self.k_list]

    @classmethod
    def from_dict(cls, data: dict) -> "SolverConfig":
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        try:
            cfg = cls(**data)
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from exc
        cfg.validate_schema()
        return cfg

    @classmethod
    def from_json(cls, path) -> "SolverConfig":
        try:
            data = json.loads(Path(path).read_text())
        except FileNotFoundError as exc:
            raise ConfigError(f"config file not found: {path}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"malformed config {path}: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
        return cls.from_dict(data)

    def to_dict(self) -> dict:
        return asdict(self)

    def digest(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()

    @property
    def n_steps(self) -> int:
        return int(round(self.T / self.dt))

    def validate_schema(self) -> None:
        if self.d not in (2, 3):
            raise ConfigError(f"d must be 2 or 3, got {self.d}")
        if self.N < 4 or self.N & (self.N - 1):
            raise ConfigError(f"N must be a power of two >= 4, got {self.N}")
        if not self.nu >= 0:
            raise ConfigError(f"nu must be >= 0, got {self.nu}")
        if not (self.dt > 0 and self.T > 0):
            raise ConfigError("dt and T must be positive")
        if abs(self.n_steps * self.dt - self.T) > 1e-9 * self.T:
            raise ConfigError(f"T={self.T} is not an integer multiple of dt={self.dt}")
        if self.trace_every < 1:
            raise ConfigError("trace_every must be >= 1")
        if self.initial in ("tg2d", "tg3d") and int(self.initial[2]) != self.d:
            raise ConfigError(f"preset {self.initial} does not match d={self.d}")
        if self.initial not in PRESETS and not Path(self.initial).exists():
            raise ConfigError(f"initial data must be one of {PRESETS} or an existing snapshot path")
        if any(k < 0 for k in self.k_list):
            raise ConfigError("cutoff radii must be >= 0")


def initial_field(cfg: SolverConfig) -> sp.SpectralField:
    if cfg.initial == "tg2d":
        u = sp.taylor_green_2d(cfg.N, cfg.amplitude)
    elif cfg.initial == "tg3d":
        u = sp.taylor_green_3d(cfg.N, cfg.amplitude)
    elif cfg.initial == "random":
        u = sp.random_solenoidal(cfg.d, cfg.N, seed=cfg.seed, kmax=cfg.kmax, slope=cfg.slope, rms=cfg.amplitude)
    else:
        u = sp.load_snapshot(cfg.initial)
        if (u.d, u.N) != (cfg.d, cfg.N):
            raise ConfigError(f"snapshot grid d={u.d}, N={u.N} does not match config")
    return _clean(u)


def _clean(u: sp.SpectralField) -> sp.SpectralField:
    """Mean-free, Nyquist-free, divergence-free copy."""
    c = np.where(sp.nyquist_mask(u.d, u.N), 0, u.coeffs)
    c[(slice(None),) + (0,) * u.d] = 0
    return sp.leray_project(sp.SpectralField(c, u.time))


def check_cfl(cfg: SolverConfig, u0: sp.SpectralField) -> float:
    """Raise unless ``dt <= cfl / (N max|u0|)``; returns the bound."""
    umax = sp.linf_norm(u0)
    bound = math.inf if umax == 0 else cfg.cfl / (cfg.N * umax)
    if cfg.dt > bound:
        raise ConfigError(f"dt={cfg.dt} violates the advective bound {bound:.3g} (cfl={cfg.cfl})")
    return bound


class IFRK4:
    """Lawson (integrating-factor) RK4 for ``c' = -nu |xi|^2 c + F(c)``.

    ``integrands`` maps a coefficient array to a vector of nonnegative rates
    that are integrated in time with the same stages.
    """

    def __init__(self, d: int, N: int, nu: float, dt: float, integrands=None):
        self.d, self.N, self.nu, self.dt = d, N, float(nu), float(dt)
        r2 = sp.radius_squared(d, N).astype(np.float64)
        self.half = np.exp(-self.nu * r2 * dt / 2.0)
        self.full = self.half * self.half
        self.keep = (~sp.nyquist_mask(d, N)).astype(np.float64)
        self.keep[(0,) * d] = 0.0
        self.integrands = integrands

    def nonlinear(self, c: np.ndarray) -> np.ndarray:
        u = sp.SpectralField(c)
        return -sp.leray_project(sp.convect(u, u)).coeffs * self.keep

    def step(self, c: np.ndarray):
        h, E2, E = self.dt, self.half, self.full
        k1 = self.nonlinear(c)
        U2 = E2 * (c + 0.5 * h * k1)
        k2 = self.nonlinear(U2)
        U3 = E2 * c + 0.5 * h * k2
        k3 = self.nonlinear(U3)
        U4 = E * c + h * E2 * k3
        k4 = self.nonlinear(U4)
        new = E * c + (h / 6.0) * (E * k1 + 2.0 * E2 * (k2 + k3) + k4)
        if not np.all(np.isfinite(new)):
            raise BlowUpError("non-finite coefficients", math.nan, -1)
        quad = None
        if self.integrands is not None:
            g = [self.integrands(U) for U in (c, U2, U3, U4)]
            quad = (h / 6.0) * (g[0] + 2.0 * g[1] + 2.0 * g[2] + g[3])
        return new, quad


def step(state: sp.SpectralField, cfg: SolverConfig) -> sp.SpectralField:
    """Advance one time step of length ``cfg.dt``."""
    new, _ = IFRK4(state.d, state.N, cfg.nu, cfg.dt).step(state.coeffs)
    return sp.SpectralField(new, state.time + cfg.dt, True)


@dataclass
class TraceRecord:
    step: int
    time: float
    energy: float
    dissipation: float
    hdot: dict[float, float]
    hs: dict[float, float]
    hs_dissipation: dict[float, float]
    x1: float
    highpass_energy: dict[float, float]
    highpass_grad_energy: dict[float, float]
    divergence: float
    profile: ShellProfile | None = None

    def balance_residual(self, energy0: float) -> float:
        """``energy + dissipation - energy(0)``; nonpositive up to time-stepping error."""
        return self.energy + self.dissipation - energy0


@dataclass
class RunResult:
    config: SolverConfig
    records: list[TraceRecord]
    final: sp.SpectralField
    states: list[sp.SpectralField]
    halted: bool = False
    message: str = ""

    @property
    def energy0(self) -> float:
        return self.records[0].energy

    def max_balance_residual(self) -> float:
        e0 = self.energy0
        return max(abs(r.balance_residual(e0)) for r in self.records)

    def energy_inequality_holds(self, tol: float) -> bool:
        e0 = self.energy0
        return all(r.balance_residual(e0) <= tol for r in self.records)

    def csv_columns(self) -> list[str]:
        cfg = self.config
        cols = ["step", "time", "energy", "dissipation", "energy_balance_residual", "x1_norm", "divergence_residual"]
        cols += [f"hdot_s={s:g}" for s in cfg.s_list]
        cols += [f"hs_s={s:g}" for s in cfg.s_list]
        cols += [f"hs_dissipation_s={s:g}" for s in cfg.s_list]
        cols += [f"highpass_energy_k={k:g}" for k in cfg.k_list]
        cols += [f"highpass_grad_energy_k={k:g}" for k in cfg.k_list]
        return cols

    def write_csv(self, path) -> None:
        cfg, e0 = self.config, self.energy0
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(self.csv_columns())
            for r in self.records:
                row = [r.step, repr(r.time), repr(r.energy), repr(r.dissipation), repr(r.balance_residual(e0)),
                       repr(r.x1), repr(r.divergence)]
                row += [repr(r.hdot[s]) for s in cfg.s_list]
                row += [repr(r.hs[s]) for s in cfg.s_list]
                row += [repr(r.hs_dissipation[s]) for s in cfg.s_list]
                row += [repr(r.highpass_energy[k]) for k in cfg.k_list]
                row += [repr(r.highpass_grad_energy[k]) for k in cfg.k_list]
                w.writerow(row)


def _integrands(cfg: SolverConfig):
    r2 = sp.radius_squared(cfg.d, cfg.N).astype(np.float64)
    vol = sp.TWO_PI ** cfg.d
    weights = [2.0 * cfg.nu * r2] + [cfg.nu * (1.0 + r2) ** (s + 1.0) for s in cfg.s_list]

    def rates(c: np.ndarray) -> np.ndarray:
        e = np.sum(np.abs(c) ** 2, axis=0)
        return np.array([vol * float(np.sum(w * e)) for w in weights])

    return rates


def _record(cfg, u, n, integrals, with_profile) -> TraceRecord:
    prof = sp.shell_profile(u)
    return TraceRecord(
        step=n,
        time=u.time,
        energy=sp.l2_norm_sq(u),
        dissipation=float(integrals[0]),
        hdot={s: sp.hdot_norm(u, s) for s in cfg.s_list},
        hs={s: sp.hs_norm(u, s) for s in cfg.s_list},
        hs_dissipation={s: float(v) for s, v in zip(cfg.s_list, integrals[1:])},
        x1=x1_norm(prof),
        highpass_energy={k: sp.l2_norm_sq(sp.high_pass(u, k)) for k in cfg.k_list},
        highpass_grad_energy={k: sp.grad_norm_sq(sp.high_pass(u, k)) for k in cfg.k_list},
        divergence=sp.divergence_residual(u),
        profile=prof if with_profile else None,
    )


def run(cfg: SolverConfig, keep_states: bool = False, u0: sp.SpectralField | None = None,
        snapshot_dir=None) -> RunResult:
    """Integrate to ``cfg.T``, recording every ``cfg.trace_every`` steps (plus the last)."""
    cfg.validate_schema()
    u = _clean(u0) if u0 is not None else initial_field(cfg)
    check_cfl(cfg, u)
    stepper = IFRK4(cfg.d, cfg.N, cfg.nu, cfg.dt, integrands=_integrands(cfg))
    integrals = np.zeros(1 + len(cfg.s_list))
    nsteps = cfg.n_steps

    def wants(n, every):
        return every > 0 and (n % every == 0 or n == nsteps)

    records = [_record(cfg, u, 0, integrals, wants(0, cfg.profile_every))]
    states = [u] if keep_states else []
    _maybe_snapshot(cfg, u, 0, snapshot_dir)
    c = u.coeffs
    for n in range(1, nsteps + 1):
        try:
            with np.errstate(over="ignore", invalid="ignore"):  # non-finite values are caught below
                c, quad = stepper.step(c)
        except BlowUpError as exc:
            msg = f"blow-up at step {n} (t={(n - 1) * cfg.dt:.6g}): {exc}"
            log.warning(msg)
            return RunResult(cfg, records, u, states, halted=True, message=msg)
        integrals += quad
        record = n % cfg.trace_every == 0 or n == nsteps
        snapshot = wants(n, cfg.snapshot_every)
        if record or snapshot:
            u = sp.SpectralField(c, n * cfg.dt, True)
        if record:
            records.append(_record(cfg, u, n, integrals, wants(n, cfg.profile_every)))
            if keep_states:
                states.append(u)
        if snapshot:
            _maybe_snapshot(cfg, u, n, snapshot_dir)
    final = sp.SpectralField(c, nsteps * cfg.dt, True)
    return RunResult(cfg, records, final, states)


def _maybe_snapshot(cfg, u, n, snapshot_dir) -> None:
    if snapshot_dir is None or cfg.snapshot_every <= 0:
        return
    sp.save_snapshot(u, Path(snapshot_dir) / f"snapshot_{n:07d}.bin")
