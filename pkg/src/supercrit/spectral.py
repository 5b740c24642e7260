"""Real vector fields on the 2π-periodic torus stored as lattice Fourier coefficients.

Convention: ``u(x) = sum_xi c(xi) exp(i xi.x)`` with integer wavevectors, so
``||u||_2**2 = (2π)**d * sum |c|**2`` and ``||u||_inf <= sum |c|``. Arrays use
numpy FFT ordering: index ``i`` along an axis is wavenumber ``i`` for
``i < N/2`` and ``i - N`` otherwise.

Cutoffs are sharp on the Euclidean radius: ``high_pass(f, k)`` keeps
``|xi| >= k`` and ``low_pass(f, k)`` keeps ``|xi| < k``. Products are
computed on a 3/2 zero-padded grid, which is exact for fields whose Nyquist
planes vanish.
"""
from __future__ import annotations

import math
import struct
from dataclasses import dataclass, field, replace
from fractions import Fraction
from functools import lru_cache
from pathlib import Path

import numpy as np

from supercrit import kernels
from supercrit.shells import ShellProfile

TWO_PI = 2.0 * math.pi


@lru_cache(maxsize=16)
def wavevectors(d: int, N: int) -> tuple[np.ndarray, ...]:
    """Integer wavevector components, each of shape ``(N,)*d``."""
    k = np.fft.fftfreq(N, 1.0 / N).round().astype(np.int64)
    grids = np.meshgrid(*([k] * d), indexing="ij")
    for g in grids:
        g.setflags(write=False)
    return tuple(grids)


@lru_cache(maxsize=16)
def radius_squared(d: int, N: int) -> np.ndarray:
    r2 = sum(g * g for g in wavevectors(d, N))
    r2.setflags(write=False)
    return r2


@lru_cache(maxsize=16)
def nyquist_mask(d: int, N: int) -> np.ndarray:
    mask = np.zeros((N,) * d, dtype=bool)
    for g in wavevectors(d, N):
        mask |= np.abs(g) == N // 2
    mask.setflags(write=False)
    return mask


@lru_cache(maxsize=16)
def _shell_and_annulus(d: int, N: int) -> tuple[np.ndarray, np.ndarray]:
    r2 = np.ascontiguousarray(radius_squared(d, N).ravel())
    return np.asarray(kernels.shell_indices(r2)), np.asarray(kernels.annulus_indices(r2))


def _check_grid(d: int, N: int) -> None:
    if d not in (2, 3):
        raise ValueError(f"dimension must be 2 or 3, got {d}")
    if N < 4 or N & (N - 1):
        raise ValueError(f"grid size must be a power of two >= 4, got {N}")


@dataclass(frozen=True)
class SpectralField:
    """Coefficients ``coeffs[i]`` of component i; shape ``(d,) + (N,)*d``."""

    coeffs: np.ndarray = field(repr=False)
    time: float = 0.0
    divergence_free: bool = False

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=np.complex128)
        if c.ndim < 3:
            raise ValueError("coeffs must have shape (d, N, ..., N)")
        d, N = c.shape[0], c.shape[1]
        _check_grid(d, N)
        if c.shape != (d,) + (N,) * d:
            raise ValueError(f"inconsistent coefficient shape {c.shape}")
        object.__setattr__(self, "coeffs", c)

    @property
    def d(self) -> int:
        return self.coeffs.shape[0]

    @property
    def N(self) -> int:
        return self.coeffs.shape[1]

    def _new(self, coeffs, divergence_free=None) -> "SpectralField":
        flag = self.divergence_free if divergence_free is None else divergence_free
        return SpectralField(coeffs, self.time, flag)

    def __add__(self, other: "SpectralField") -> "SpectralField":
        _same_grid(self, other)
        return self._new(self.coeffs + other.coeffs, self.divergence_free and other.divergence_free)

    def __sub__(self, other: "SpectralField") -> "SpectralField":
        _same_grid(self, other)
        return self._new(self.coeffs - other.coeffs, self.divergence_free and other.divergence_free)

    def __mul__(self, scalar: float) -> "SpectralField":
        return self._new(self.coeffs * scalar)

    __rmul__ = __mul__

    def at_time(self, t: float) -> "SpectralField":
        return replace(self, time=float(t))


def _same_grid(f: SpectralField, g: SpectralField) -> None:
    if f.coeffs.shape != g.coeffs.shape:
        raise ValueError(f"grid mismatch: {f.coeffs.shape} vs {g.coeffs.shape}")


def zeros(d: int, N: int) -> SpectralField:
    _check_grid(d, N)
    return SpectralField(np.zeros((d,) + (N,) * d, dtype=np.complex128), divergence_free=True)


# --- transforms ---------------------------------------------------------------

def _spatial_axes(d: int) -> tuple[int, ...]:
    return tuple(range(1, d + 1))


def transform_to_physical(f: SpectralField) -> np.ndarray:
    """Samples ``u(x)`` on the uniform grid ``x = 2π n / N``; shape ``(d,) + (N,)*d``."""
    return np.fft.ifftn(f.coeffs, axes=_spatial_axes(f.d)).real * f.N ** f.d


def transform_to_spectral(samples: np.ndarray, time: float = 0.0) -> SpectralField:
    samples = np.asarray(samples, dtype=np.float64)
    d = samples.shape[0]
    if samples.ndim != d + 1:
        raise ValueError(f"expected {d} spatial axes for {d} components, got shape {samples.shape}")
    N = samples.shape[1]
    return SpectralField(np.fft.fftn(samples, axes=_spatial_axes(d)) / N ** d, time)


def conj_flip(c: np.ndarray, d: int) -> np.ndarray:
    """Array whose entry at xi is ``conj(c(-xi))`` (spatial axes are the last d)."""
    axes = tuple(range(c.ndim - d, c.ndim))
    return np.conj(np.roll(np.flip(c, axis=axes), 1, axis=axes))


def hermitian_residual(f: SpectralField) -> float:
    scale = np.abs(f.coeffs).max()
    if scale == 0:
        return 0.0
    return float(np.abs(f.coeffs - conj_flip(f.coeffs, f.d)).max() / scale)


def _embed(c: np.ndarray, d: int, M: int) -> np.ndarray:
    """Zero-pad coefficients from an N-grid onto an M-grid (M >= N)."""
    N = c.shape[-1]
    idx = np.fft.fftfreq(N, 1.0 / N).round().astype(np.int64) % M
    out = np.zeros(c.shape[:-d] + (M,) * d, dtype=np.complex128)
    out[(Ellipsis,) + np.ix_(*([idx] * d))] = c
    return out


def _truncate(c: np.ndarray, d: int, N: int) -> np.ndarray:
    M = c.shape[-1]
    idx = np.fft.fftfreq(N, 1.0 / N).round().astype(np.int64) % M
    return c[(Ellipsis,) + np.ix_(*([idx] * d))]


def _to_grid(c: np.ndarray, d: int, M: int) -> np.ndarray:
    axes = tuple(range(c.ndim - d, c.ndim))
    return np.fft.ifftn(_embed(c, d, M), axes=axes).real * M ** d


def _to_grid_real(c: np.ndarray, d: int, M: int) -> np.ndarray:
    """As :func:`_to_grid` for Hermitian input with vanishing Nyquist planes, via real FFTs."""
    axes = tuple(range(c.ndim - d, c.ndim))
    half = _embed(c, d, M)[..., : M // 2 + 1]
    return np.fft.irfftn(half, s=(M,) * d, axes=axes) * M ** d


# --- quadratic quantities -----------------------------------------------------

def inner(f: SpectralField, g: SpectralField) -> float:
    """L2 inner product ``(f, g)`` on the torus."""
    _same_grid(f, g)
    return TWO_PI ** f.d * float(np.vdot(f.coeffs, g.coeffs).real)


def l2_norm_sq(f: SpectralField) -> float:
    return TWO_PI ** f.d * float(np.sum(np.abs(f.coeffs) ** 2))


def l2_norm(f: SpectralField) -> float:
    return math.sqrt(l2_norm_sq(f))


def _mode_energy(f: SpectralField) -> np.ndarray:
    return np.sum(np.abs(f.coeffs) ** 2, axis=0)


def grad_norm_sq(f: SpectralField) -> float:
    return TWO_PI ** f.d * float(np.sum(radius_squared(f.d, f.N) * _mode_energy(f)))


def hdot_norm(f: SpectralField, s: float) -> float:
    """``|| |xi|**s u_hat ||_2``; the zero mode is excluded."""
    r2 = radius_squared(f.d, f.N).astype(np.float64)
    e = _mode_energy(f)
    nz = r2 > 0
    return math.sqrt(TWO_PI ** f.d * float(np.sum(r2[nz] ** s * e[nz])))


def hs_norm(f: SpectralField, s: float) -> float:
    """Inhomogeneous ``|| (1 + |xi|**2)**(s/2) u_hat ||_2``."""
    r2 = radius_squared(f.d, f.N).astype(np.float64)
    return math.sqrt(TWO_PI ** f.d * float(np.sum((1.0 + r2) ** s * _mode_energy(f))))


def l1_coeff_norm(f: SpectralField) -> float:
    """``sum_xi |c(xi)|``, an upper bound for the sup norm."""
    return float(np.sum(np.sqrt(_mode_energy(f))))


def grad_l1_coeff_norm(f: SpectralField) -> float:
    r = np.sqrt(radius_squared(f.d, f.N).astype(np.float64))
    return float(np.sum(r * np.sqrt(_mode_energy(f))))


# --- sharp cutoffs ------------------------------------------------------------

def _radius_threshold(k: float) -> int:
    """Smallest integer m with m >= k**2, exactly."""
    k = Fraction(k)
    if k < 0:
        raise ValueError(f"cutoff radius must be >= 0, got {float(k)}")
    sq = k * k
    return -((-sq.numerator) // sq.denominator)


def high_mask(d: int, N: int, k: float) -> np.ndarray:
    return radius_squared(d, N) >= _radius_threshold(k)


def high_pass(f: SpectralField, k: float) -> SpectralField:
    """Part with ``|xi| >= k``."""
    return f._new(np.where(high_mask(f.d, f.N, k), f.coeffs, 0))


def low_pass(f: SpectralField, k: float) -> SpectralField:
    """Part with ``|xi| < k``."""
    return f._new(np.where(high_mask(f.d, f.N, k), 0, f.coeffs))


def band_pass(f: SpectralField, h: float, k: float) -> SpectralField:
    """Part with ``h <= |xi| < k``."""
    if not h < k:
        raise ValueError(f"band_pass needs h < k, got h={h}, k={k}")
    keep = high_mask(f.d, f.N, h) & ~high_mask(f.d, f.N, k)
    return f._new(np.where(keep, f.coeffs, 0))


def max_radius(f: SpectralField) -> float:
    """Largest ``|xi|`` carrying a nonzero coefficient (0 for the zero field)."""
    e = _mode_energy(f)
    nz = e > 0
    if not nz.any():
        return 0.0
    return math.sqrt(float(radius_squared(f.d, f.N)[nz].max()))


# --- shell and annulus decompositions ------------------------------------------

@dataclass
class AnnulusProfile:
    """Map n -> ``||u_{n,n+1}||_2`` (n = 0 is the zero mode)."""

    d: int
    entries: dict[int, float]

    def energy(self) -> float:
        return math.fsum(v * v for v in self.entries.values())


def shell_energies(f: SpectralField) -> dict[int, float]:
    """``||Delta_j u||_2**2`` for every nonempty shell, plus key 0 for the zero mode."""
    shells, _ = _shell_and_annulus(f.d, f.N)
    e = TWO_PI ** f.d * _mode_energy(f).ravel()
    sums = np.bincount(shells, weights=e)
    return {int(j): float(v) for j, v in enumerate(sums) if v > 0}


def shell_profile(f: SpectralField) -> ShellProfile:
    energies = shell_energies(f)
    energies.pop(0, None)
    return ShellProfile.from_magnitudes(f.d, {j: math.sqrt(v) for j, v in energies.items()})


def zero_mode_energy(f: SpectralField) -> float:
    return TWO_PI ** f.d * float(np.sum(np.abs(f.coeffs[(slice(None),) + (0,) * f.d]) ** 2))


def annulus_energies(f: SpectralField, gradient: bool = False) -> np.ndarray:
    """``||u_{n,n+1}||_2**2`` (or of its gradient) indexed by n = 0 .. max."""
    _, ann = _shell_and_annulus(f.d, f.N)
    e = _mode_energy(f)
    if gradient:
        e = e * radius_squared(f.d, f.N)
    return np.bincount(ann, weights=TWO_PI ** f.d * e.ravel())


def annulus_profile(f: SpectralField) -> AnnulusProfile:
    sums = annulus_energies(f)
    return AnnulusProfile(f.d, {int(n): math.sqrt(v) for n, v in enumerate(sums) if v > 0})


@lru_cache(maxsize=16)
def shell_lattice_counts(d: int, N: int) -> dict[int, int]:
    """Number of lattice points (Nyquist planes excluded) in each dyadic shell."""
    shells, _ = _shell_and_annulus(d, N)
    keep = ~nyquist_mask(d, N).ravel()
    counts = np.bincount(shells[keep])
    return {int(j): int(c) for j, c in enumerate(counts) if c > 0 and j > 0}


# --- projections and products -------------------------------------------------

def divergence_residual(f: SpectralField) -> float:
    """``max |xi . c(xi)| / max |xi| |c(xi)|`` (0 for the zero field)."""
    ks = wavevectors(f.d, f.N)
    div = sum(k * c for k, c in zip(ks, f.coeffs))
    scale = np.max(np.sqrt(radius_squared(f.d, f.N) * _mode_energy(f)))
    if scale == 0:
        return 0.0
    return float(np.abs(div).max() / scale)


def leray_project(f: SpectralField) -> SpectralField:
    """``c - xi (xi . c) / |xi|**2`` per mode; the zero mode is left as is."""
    ks = wavevectors(f.d, f.N)
    r2 = radius_squared(f.d, f.N)
    inv = np.where(r2 > 0, 1.0 / np.where(r2 > 0, r2, 1), 0.0)
    div = sum(k * c for k, c in zip(ks, f.coeffs)) * inv
    out = np.stack([c - k * div for k, c in zip(ks, f.coeffs)])
    return f._new(out, divergence_free=True)


def gradient_coeffs(f: SpectralField) -> np.ndarray:
    """``[i, j] -> coefficients of d u_i / d x_j``."""
    ks = wavevectors(f.d, f.N)
    return np.stack([np.stack([1j * k * c for k in ks]) for c in f.coeffs])


def dealiased_grid(N: int) -> int:
    return 3 * N // 2


def convect(u: SpectralField, w: SpectralField) -> SpectralField:
    """Coefficients of ``(u . grad) w`` via a 3/2 zero-padded product.

    Inputs are read as real fields; coefficients on the Nyquist planes are
    ignored, and the result is exact for inputs supported off those planes.
    """
    _same_grid(u, w)
    d, N = u.d, u.N
    M = dealiased_grid(N)
    u_phys = _to_grid_real(u.coeffs, d, M)
    grad_phys = _to_grid_real(gradient_coeffs(w), d, M)
    prod = np.einsum("j...,ij...->i...", u_phys, grad_phys)
    c = np.fft.fftn(prod, axes=_spatial_axes(d)) / M ** d
    return SpectralField(_truncate(c, d, N), u.time, False)


def trilinear(u: SpectralField, w: SpectralField, v: SpectralField) -> float:
    """``((u . grad) w, v)``."""
    return inner(convect(u, w), v)


# --- sup norms ------------------------------------------------------------------

def _oversampled(c: np.ndarray, d: int, N: int) -> np.ndarray:
    return _to_grid(c, d, 2 * N)


def linf_norm(f: SpectralField) -> float:
    """Max over a 2x oversampled grid of the pointwise Euclidean magnitude."""
    vals = _oversampled(f.coeffs, f.d, f.N)
    return float(np.sqrt(np.sum(vals ** 2, axis=0)).max())


def grad_linf_norm(f: SpectralField) -> float:
    """Max over a 2x oversampled grid of the Frobenius norm of the velocity gradient."""
    g = _oversampled(gradient_coeffs(f), f.d, f.N)
    return float(np.sqrt(np.sum(g ** 2, axis=(0, 1))).max())


# --- initial data ---------------------------------------------------------------

def taylor_green_2d(N: int, amplitude: float = 1.0) -> SpectralField:
    """``(sin x cos y, -cos x sin y)``."""
    _check_grid(2, N)
    c = np.zeros((2, N, N), dtype=np.complex128)
    # sin x cos y = sum over (+-1, +-1) of sgn(kx) / (4i) e^{i(kx x + ky y)}
    for kx in (1, -1):
        for ky in (1, -1):
            c[0, kx % N, ky % N] = amplitude * kx / 4j
            c[1, kx % N, ky % N] = -amplitude * ky / 4j
    return SpectralField(c, 0.0, True)


def taylor_green_3d(N: int, amplitude: float = 1.0) -> SpectralField:
    """``(sin x cos y cos z, -cos x sin y cos z, 0)``."""
    _check_grid(3, N)
    c = np.zeros((3, N, N, N), dtype=np.complex128)
    for kx in (1, -1):
        for ky in (1, -1):
            for kz in (1, -1):
                c[0, kx % N, ky % N, kz % N] = amplitude * kx / 8j
                c[1, kx % N, ky % N, kz % N] = -amplitude * ky / 8j
    return SpectralField(c, 0.0, True)


def random_solenoidal(d: int, N: int, seed: int = 0, kmax: float | None = None,
                      slope: float = 1.0, rms: float = 1.0, kmin: float = 1.0) -> SpectralField:
    """Seeded real divergence-free field band-limited to ``kmin <= |xi| <= kmax``.

    Shell magnitudes follow ``2**(-slope * j)`` before the overall rescaling
    to the requested root-mean-square velocity.
    """
    _check_grid(d, N)
    kmax = N / 4 if kmax is None else float(kmax)
    if kmax >= N / 2:
        raise ValueError("kmax must stay below the Nyquist wavenumber")
    rng = np.random.default_rng(seed)
    shape = (d,) + (N,) * d
    c = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    r2 = radius_squared(d, N)
    band = (r2 >= kmin * kmin) & (r2 <= kmax * kmax) & ~nyquist_mask(d, N)
    c = np.where(band, c, 0)
    c = 0.5 * (c + conj_flip(c, d))
    f = leray_project(SpectralField(c))
    shells, _ = _shell_and_annulus(d, N)
    shells = shells.reshape(r2.shape)
    energies = shell_energies(f)
    out = f.coeffs.copy()
    for j, e in energies.items():
        if j == 0 or e == 0:
            continue
        out[:, shells == j] *= 2.0 ** (-slope * j) / math.sqrt(e)
    f = SpectralField(out, 0.0, True)
    scale = rms * math.sqrt(TWO_PI ** d) / l2_norm(f)
    return f * scale


def single_mode(d: int, N: int, xi, amplitude: float = 1.0, direction=None) -> SpectralField:
    """Real divergence-free field ``2 A e cos(xi.x)`` built from the pair ``+-xi``."""
    xi = np.asarray(xi, dtype=np.int64)
    if direction is None:
        direction = np.zeros(d)
        direction[np.argmin(np.abs(xi))] = 1.0
    e = np.asarray(direction, dtype=np.float64)
    e = e - xi * (xi @ e) / (xi @ xi)
    e = e / np.linalg.norm(e)
    c = np.zeros((d,) + (N,) * d, dtype=np.complex128)
    for sign in (1, -1):
        c[(slice(None),) + tuple((sign * xi) % N)] = amplitude * e
    return SpectralField(c, 0.0, True)


# --- binary snapshots -----------------------------------------------------------

SNAPSHOT_MAGIC = b"SCSF"
SNAPSHOT_VERSION = 1
_HEADER = struct.Struct("<4sIIIdI")
FLAG_DIVERGENCE_FREE = 1
FLAG_SINGLE_PRECISION = 2

SNAPSHOT_MANIFEST = """\
format: supercrit spectral snapshot v{version}
header: little-endian struct '<4sIIIdI' = magic 'SCSF', version, d, N, time, flags
flags: bit0 divergence-free, bit1 complex64 coefficients (else complex128)
payload: d component blocks, each N**d little-endian complex values, row-major
index map: array index i on every axis is wavenumber i if i < N/2 else i - N
fourier convention: u(x) = sum_xi c(xi) exp(i xi.x), x in [0, 2pi)^d
norm: ||u||_2^2 = (2pi)^d sum |c|^2
d: {d}
N: {N}
time: {time!r}
"""


def save_snapshot(f: SpectralField, path, single_precision: bool = False) -> Path:
    """Write the binary snapshot plus a ``.manifest.txt`` sidecar; returns the manifest path."""
    path = Path(path)
    flags = (FLAG_DIVERGENCE_FREE if f.divergence_free else 0) | (FLAG_SINGLE_PRECISION if single_precision else 0)
    dtype = "<c8" if single_precision else "<c16"
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(SNAPSHOT_MAGIC, SNAPSHOT_VERSION, f.d, f.N, float(f.time), flags))
        fh.write(np.ascontiguousarray(f.coeffs, dtype=dtype).tobytes(order="C"))
    manifest = path.with_name(path.name + ".manifest.txt")
    manifest.write_text(SNAPSHOT_MANIFEST.format(version=SNAPSHOT_VERSION, d=f.d, N=f.N, time=float(f.time)))
    return manifest


def load_snapshot(path) -> SpectralField:
    raw = Path(path).read_bytes()
    if len(raw) < _HEADER.size:
        raise ValueError("truncated snapshot header")
    magic, version, d, N, time, flags = _HEADER.unpack_from(raw)
    if magic != SNAPSHOT_MAGIC:
        raise ValueError(f"not a snapshot file (magic {magic!r})")
    if version != SNAPSHOT_VERSION:
        raise ValueError(f"unsupported snapshot version {version}")
    dtype = "<c8" if flags & FLAG_SINGLE_PRECISION else "<c16"
    count = d * N ** d
    data = np.frombuffer(raw, dtype=dtype, count=count, offset=_HEADER.size)
    if data.size != count:
        raise ValueError("truncated snapshot payload")
    return SpectralField(data.reshape((d,) + (N,) * d).astype(np.complex128), time,
                         bool(flags & FLAG_DIVERGENCE_FREE))
