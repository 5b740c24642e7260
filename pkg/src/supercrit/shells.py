"""Dyadic shell profiles and the norms computed from them.

A :class:`ShellProfile` stores, for each shell index j, the L2 magnitude
``c_j = ||Delta_j v||_2`` of the part of a field with ``2**(j-1) <= |xi| < 2**j``.
Magnitudes are kept as ``mantissa * 2**exponent`` with an exact integer
exponent, which makes the critical weight
``w_j = 2**(j * (d/2 - 1)) * c_j`` exact under dilation by ``2**(2**l)``:
dilation shifts the index by ``m = 2**(2**l)`` and the exponent by
``(1 - d/2) * m`` (an integer, since m is even), so ``w`` moves without any
rounding even when ``c_j`` itself is far outside double range.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping

from supercrit.weights import extended_a


def _split(value: float) -> tuple[float, int]:
    if not math.isfinite(value) or value < 0:
        raise ValueError(f"shell magnitudes must be finite and >= 0, got {value}")
    return math.frexp(value)


def _float_exponent(x: int) -> float:
    try:
        return float(x)
    except OverflowError:
        return math.inf if x > 0 else -math.inf


def _log_space_norm(terms: Iterable[tuple[float, float]]) -> float:
    """``sqrt(sum mant**2 * 2**e)`` from pairs (mant, e), without overflow in the sum."""
    terms = [(m, e) for m, e in terms if m != 0.0]
    if not terms:
        return 0.0
    emax = max(e for _, e in terms)
    if math.isinf(emax):
        return math.inf
    scaled = sorted((m * m * 2.0 ** (e - emax) for m, e in terms), reverse=True)
    total = math.fsum(scaled)
    half = emax / 2.0
    try:
        return math.sqrt(total) * 2.0 ** half
    except OverflowError:
        return math.inf


@dataclass(frozen=True)
class ShellProfile:
    """Sparse map j -> ||Delta_j v||_2 for a field in dimension d.

    ``entries`` holds ``(j, mantissa, exponent)`` triples sorted by j with
    ``mantissa`` in [0.5, 1); build profiles with :meth:`from_magnitudes`.
    """

    d: int
    entries: tuple[tuple[int, float, int], ...] = field(default=())

    def __post_init__(self):
        if int(self.d) != self.d or self.d < 2:
            raise ValueError(f"dimension must be an integer >= 2, got {self.d}")
        canon = []
        seen = set()
        for j, mant, exp in self.entries:
            if j in seen:
                raise ValueError(f"duplicate shell index {j}")
            seen.add(j)
            m, e = _split(float(mant))
            if m != 0.0:
                canon.append((int(j), m, int(exp) + e))
        object.__setattr__(self, "entries", tuple(sorted(canon)))

    @classmethod
    def from_magnitudes(cls, d: int, magnitudes: Mapping[int, float]) -> "ShellProfile":
        return cls(d, tuple((int(j), float(c), 0) for j, c in magnitudes.items()))

    @property
    def critical_exponent(self) -> float:
        return self.d / 2.0 - 1.0

    @property
    def support(self) -> list[int]:
        return [j for j, _, _ in self.entries]

    def __len__(self) -> int:
        return len(self.entries)

    def __bool__(self) -> bool:
        return bool(self.entries)

    def magnitude(self, j: int) -> float:
        """``c_j`` as a float (0.0 when absent or below double range)."""
        for jj, m, e in self.entries:
            if jj == j:
                try:
                    return math.ldexp(m, e)
                except OverflowError:
                    return math.inf
        return 0.0

    def magnitudes(self) -> dict[int, float]:
        return {j: self.magnitude(j) for j in self.support}

    def _critical_twice_log2(self, j: int, exp: int) -> int:
        # 2 * log2(w_j / mantissa), exact
        return 2 * exp + (self.d - 2) * j

    def weighted(self) -> dict[int, float]:
        """Critically weighted sequence ``w_j = 2**(j (d/2 - 1)) c_j``."""
        out = {}
        for j, m, e in self.entries:
            try:
                out[j] = m * 2.0 ** (self._critical_twice_log2(j, e) / 2.0)
            except OverflowError:
                out[j] = math.inf
        return out

    def drop(self, j: int) -> "ShellProfile":
        return ShellProfile(self.d, tuple(t for t in self.entries if t[0] != j))

    def scaled(self, factor: float) -> "ShellProfile":
        """Multiply every magnitude by ``factor >= 0``."""
        fm, fe = _split(float(factor))
        return ShellProfile(self.d, tuple((j, m * fm, e + fe) for j, m, e in self.entries))

    def merged(self, other: "ShellProfile") -> "ShellProfile":
        """Union of two profiles with disjoint supports."""
        if other.d != self.d:
            raise ValueError("dimension mismatch")
        if set(self.support) & set(other.support):
            raise ValueError("supports overlap")
        return ShellProfile(self.d, self.entries + other.entries)


def hdot_norm(p: ShellProfile, s: float) -> float:
    """``(sum_j 2**(2 s j) c_j**2) ** 0.5`` accumulated in log space."""
    s = float(s)
    crit2 = 2.0 * s - (p.d - 2)
    terms = []
    for j, m, e in p.entries:
        base = _float_exponent(p._critical_twice_log2(j, e))
        if crit2 == 0.0:
            terms.append((m, base))
        else:
            terms.append((m, base + crit2 * _float_exponent(j)))
    return _log_space_norm(terms)


def critical_norm(p: ShellProfile) -> float:
    return hdot_norm(p, p.critical_exponent)


def x1_norm(p: ShellProfile) -> float:
    """l2 norm of ``w_j / a(j)``, the log-weakened critical norm."""
    terms = []
    for j, m, e in p.entries:
        terms.append((m / extended_a(j), _float_exponent(p._critical_twice_log2(j, e))))
    return _log_space_norm(terms)


# Above this level the shift 2**(2**l) has more than 16M bits; dilated norms are then
# evaluated without materializing indices (see dilated_x1_norm).
EXACT_DILATION_MAX = 24


def dilation_shift(l: int) -> int:
    if isinstance(l, bool) or not isinstance(l, int) or l < 1:
        raise ValueError(f"dilation level must be an integer >= 1, got {l!r}")
    if l > EXACT_DILATION_MAX:
        raise OverflowError(f"shift 2**(2**{l}) is too large to materialize; use dilated_x1_norm")
    return 1 << (1 << l)


def dilate(p: ShellProfile, l: int) -> ShellProfile:
    """Profile of ``lam * v(lam x)`` with ``lam = 2**(2**l)``: index shift by lam's log2."""
    m = dilation_shift(l)
    dexp = ((2 - p.d) * m) // 2
    return ShellProfile(p.d, tuple((j + m, mant, e + dexp) for j, mant, e in p.entries))


def _far_dilated_x1(p: ShellProfile, l: int) -> float:
    # valid when every |j| is far below sqrt(m): the new index j + m then meets only the
    # window centred at m, where a = log2(m + j) = 2**l + log2(1 + j / m), iff |j| <= l
    terms = []
    for j, m, e in p.entries:
        weight = 2.0 ** l + math.log1p(math.ldexp(j, -(1 << l))) / math.log(2) if abs(j) <= l else 1.0
        terms.append((m / weight, _float_exponent(p._critical_twice_log2(j, e))))
    return _log_space_norm(terms)


def dilated_x1_norm(p: ShellProfile, l: int) -> float:
    """``x1_norm(dilate(p, l))``, also for levels too large to build the shifted profile.

    The weighted sequence only moves, so the sole change is the weight at
    the new index ``j + m`` with ``m = 2**(2**l)``.
    """
    if isinstance(l, bool) or not isinstance(l, int) or l < 1:
        raise ValueError(f"dilation level must be an integer >= 1, got {l!r}")
    if l <= EXACT_DILATION_MAX:
        return x1_norm(dilate(p, l))
    if any(abs(j) >= 2 ** 62 for j in p.support):
        raise OverflowError("support too wide for the closed-form dilated weight")
    return _far_dilated_x1(p, l)


def _weighted_squares(p: ShellProfile) -> list[tuple[int, float]]:
    out = []
    for j, m, e in p.entries:
        try:
            out.append((j, m * m * 2.0 ** p._critical_twice_log2(j, e)))
        except OverflowError:
            out.append((j, math.inf))
    return out


def tail_energy(p: ShellProfile, M: int) -> float:
    """``sum_{|j| >= M} w_j**2``."""
    return math.fsum(sorted((w for j, w in _weighted_squares(p) if abs(j) >= M), reverse=True))


def tail_threshold(p: ShellProfile, eps: float) -> int:
    """Smallest ``M >= 2`` whose critical tail ``sum_{|j|>=M} w_j**2`` is at most ``eps**2 / 2``."""
    eps = float(eps)
    if not eps > 0:
        raise ValueError("eps must be positive")
    target = eps * eps / 2.0
    if tail_energy(p, 2) <= target:
        return 2
    for M in sorted({abs(j) + 1 for j in p.support if abs(j) >= 2}):
        if tail_energy(p, M) <= target:
            return M
    raise AssertionError("finite support must yield a threshold")  # pragma: no cover


def smallness_threshold(p: ShellProfile, eps: float) -> int:
    """Dilation level beyond which the X1 norm of the dilated profile is at most eps."""
    if not p:
        raise ValueError("profile must be nonempty")
    eps = float(eps)
    M = tail_threshold(p, eps)
    x1 = x1_norm(p)
    second = math.log2(math.log2(M) * x1 / eps) + 1.0
    return max(M + 1, math.ceil(second))


def shared_smallness_threshold(profiles: Iterable[ShellProfile], eps: float) -> int:
    """One level that works for every snapshot of a time series."""
    return max(smallness_threshold(p, eps) for p in profiles)


@dataclass
class SmallnessReport:
    eps: float
    l0: int
    levels: list[int]
    values: list[float]

    @property
    def max_value(self) -> float:
        return max(self.values) if self.values else 0.0

    @property
    def passed(self) -> bool:
        return all(v <= self.eps for v in self.values)

    def to_dict(self) -> dict:
        return {"eps": self.eps, "l0": self.l0, "levels": self.levels, "values": self.values,
                "max": self.max_value, "pass": self.passed}


def verify_smallness(p: ShellProfile, eps: float, extra_l: int = 2) -> SmallnessReport:
    """Evaluate ``x1_norm(dilate(p, l))`` for ``l = l0 .. l0 + extra_l``."""
    l0 = smallness_threshold(p, eps)
    levels = list(range(l0, l0 + int(extra_l) + 1))
    return SmallnessReport(float(eps), l0, levels, [dilated_x1_norm(p, l) for l in levels])


def format_profile(p: ShellProfile) -> str:
    """Text form: ``# d=<dim>`` then ``j<TAB>c_j`` lines.

    Magnitudes outside double range are written as ``<mantissa>p<exponent>``.
    """
    lines = [f"# d={p.d}"]
    for j, m, e in p.entries:
        try:
            value = math.ldexp(m, e)
        except OverflowError:
            value = math.inf
        if value != 0.0 and math.isfinite(value) and math.frexp(value) == (m, e):
            lines.append(f"{j}\t{value!r}")
        else:
            lines.append(f"{j}\t{m!r}p{e}")
    return "\n".join(lines) + "\n"


def parse_profile(text: str) -> ShellProfile:
    d = None
    entries = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            body = line[1:].strip()
            if body.startswith("d="):
                d = int(body[2:])
            continue
        try:
            js, cs = line.split("\t")
            j = int(js)
            if "p" in cs:
                ms, es = cs.split("p")
                entries.append((j, float(ms), int(es)))
            else:
                entries.append((j, float(cs), 0))
        except ValueError as exc:
            raise ValueError(f"line {lineno}: cannot parse {raw!r}") from exc
    if d is None:
        raise ValueError("missing '# d=<dim>' header")
    return ShellProfile(d, tuple(entries))


def save_profile(p: ShellProfile, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(format_profile(p))


def load_profile(path) -> ShellProfile:
    with open(path, encoding="utf-8") as fh:
        return parse_profile(fh.read())
