"""Small-divisor arithmetic for unimodular multipliers.

A multiplier lambda = exp(2 pi i alpha) is carried by its rotation number
alpha, stored as a rational num/den together with a bound on how far that
rational may sit from the intended alpha (zero for exact rationals).  Every
quantity |lambda^h - lambda_i| is evaluated as 2 sin(pi * ||h alpha - alpha_i||)
where ||.|| is the distance to the nearest integer, reduced with exact integer
arithmetic.  This keeps tiny divisors accurate far below double precision.
"""
from __future__ import annotations

import itertools
import math
import re
from dataclasses import dataclass, field
from decimal import Decimal, InvalidOperation
from fractions import Fraction
from typing import Sequence

import mpmath

from .errors import PrecisionExhausted, RootOfUnity

__all__ = [
    "DEFAULT_DPS",
    "RotationNumber",
    "SmallDivisorReport",
    "ResonanceHit",
    "ResonanceReport",
    "omega",
    "omega_j",
    "brjuno_partial_sums",
    "admissible_partial_sums",
    "check_one_resonant",
    "liouville_like",
]

DEFAULT_DPS = 40
MIN_CORRECT_DIGITS = 10
STAGNATION_TOL = 1e-3
RESONANCE_TOL = 1e-12
NEAR_MISS_TOL = 1e-6

_CF_RE = re.compile(r"^cf:\s*(?P<head>[-\d,\s]*?)\s*(?:\((?P<tail>[\d,\s]+)\))?\s*$")


def _bits_for(dps: int) -> int:
    return int(math.ceil(dps * math.log2(10))) + 16


@dataclass(frozen=True)
class RotationNumber:
    """alpha in [0, 1) as num/den with |alpha - num/den| <= err."""

    num: int
    den: int
    err: Fraction = Fraction(0)
    source: str = ""

    def __post_init__(self) -> None:
        if self.den <= 0:
            raise ValueError("denominator must be positive")
        if not 0 <= self.num < self.den:
            object.__setattr__(self, "num", self.num % self.den)

    # constructors -----------------------------------------------------
    @classmethod
    def from_fraction(cls, q: Fraction | int, source: str = "") -> RotationNumber:
        q = Fraction(q) % 1
        return cls(q.numerator, q.denominator, Fraction(0), source or str(q))

    @classmethod
    def from_mpf(cls, x, dps: int = DEFAULT_DPS, source: str = "") -> RotationNumber:
        bits = _bits_for(dps)
        with mpmath.workprec(bits + 32):
            x = mpmath.mpf(x)
            num = int(mpmath.floor((x - mpmath.floor(x)) * mpmath.mpf(2) ** bits))
        return cls(num, 1 << bits, Fraction(2, 10**dps), source or mpmath.nstr(x, 20))

    @classmethod
    def golden(cls, dps: int = DEFAULT_DPS) -> RotationNumber:
        with mpmath.workdps(dps + 10):
            g = (mpmath.sqrt(5) - 1) / 2
        return cls.from_mpf(g, dps, "golden")

    @classmethod
    def from_cf(cls, head: Sequence[int], period: Sequence[int] = (),
                dps: int = DEFAULT_DPS) -> RotationNumber:
        """Continued fraction [a0; a1, ..., an, (period repeating)].

        A finite list is an exact rational.  A periodic tail gives a quadratic
        irrational, evaluated to ``dps`` digits.
        """
        head = [int(a) for a in head]
        period = [int(a) for a in period]
        src = "cf:" + ",".join(map(str, head)) + (f",({','.join(map(str, period))})" if period else "")
        if any(a <= 0 for a in head[1:]) or any(a <= 0 for a in period):
            raise ValueError("continued-fraction partial quotients must be positive")
        if not period:
            if not head:
                raise ValueError("empty continued fraction")
            val = Fraction(head[-1])
            for a in reversed(head[:-1]):
                val = a + 1 / val
            return cls.from_fraction(val, src)
        # convergents p_n/q_n; stop once successive convergents agree to dps
        terms = itertools.chain(head, itertools.cycle(period))
        p0, q0, p1, q1 = 1, 0, next(terms), 1
        target = Fraction(1, 10 ** (dps + 5))
        while True:
            a = next(terms)
            p0, q0, p1, q1 = p1, q1, a * p1 + p0, a * q1 + q0
            if Fraction(1, q0 * q1) < target:
                break
        with mpmath.workdps(dps + 10):
            x = mpmath.mpf(p1) / q1
        return cls.from_mpf(x, dps, src)

    @classmethod
    def parse(cls, text: str, dps: int = DEFAULT_DPS) -> RotationNumber:
        """Accept 'golden', 'p/q', 'cf:a0,a1,...[,(b1,...)]' or a decimal string.

        Decimal strings are taken at face value (the typed number is exact).
        """
        s = text.strip()
        if s.lower() in ("golden", "golden-mean", "phi"):
            return cls.golden(dps)
        m = _CF_RE.match(s)
        if m:
            head = [int(t) for t in m.group("head").replace(" ", "").split(",") if t]
            tail = [int(t) for t in (m.group("tail") or "").replace(" ", "").split(",") if t]
            return cls.from_cf(head, tail, dps)
        if "/" in s:
            p, q = s.split("/", 1)
            return cls.from_fraction(Fraction(int(p), int(q)), s)
        try:
            return cls.from_fraction(Fraction(Decimal(s)), s)
        except InvalidOperation as exc:
            raise ValueError(f"cannot parse rotation number {text!r}") from exc

    # views --------------------------------------------------------------
    @property
    def exact(self) -> bool:
        return self.err == 0

    @property
    def fraction(self) -> Fraction:
        return Fraction(self.num, self.den)

    def value(self, dps: int = DEFAULT_DPS):
        with mpmath.workdps(dps):
            return mpmath.mpf(self.num) / self.den

    @property
    def lam(self) -> complex:
        """The multiplier materialized as a double-precision complex."""
        t = 2.0 * math.pi * (self.num / self.den)
        return complex(math.cos(t), math.sin(t))

    def conjugate(self) -> RotationNumber:
        return RotationNumber((-self.num) % self.den, self.den, self.err, f"1-({self.source})")

    def __str__(self) -> str:
        return self.source or f"{self.num}/{self.den}"


def _common(rots: Sequence[RotationNumber]) -> tuple[list[int], int, list[Fraction]]:
    """Put several rotation numbers on one denominator."""
    if all(r.exact for r in rots):
        den = math.lcm(*(r.den for r in rots))
        return [r.num * (den // r.den) for r in rots], den, [Fraction(0)] * len(rots)
    bits = max(r.den.bit_length() + 1 for r in rots if not r.exact)
    den = 1 << bits
    nums, errs = [], []
    for r in rots:
        if r.den == den:
            nums.append(r.num)
            errs.append(r.err)
        else:
            nums.append((r.num * den) // r.den)
            errs.append(r.err + Fraction(1, den))
    return nums, den, errs


def _check_digits(err: Fraction, where: str) -> None:
    if err == 0:
        return
    digits = -math.log10(float(err)) if err < 1 else 0.0
    if digits < MIN_CORRECT_DIGITS:
        raise PrecisionExhausted(f"{where}: only {digits:.1f} correct digits after mod-1 reduction")


def _chord(dist_num: int, den: int, dps: int = DEFAULT_DPS):
    """2 sin(pi * dist_num/den) at extended precision."""
    with mpmath.workdps(dps):
        return 2 * mpmath.sin(mpmath.pi * mpmath.mpf(dist_num) / den)


def _running_min_dist(step: int, offset: int, den: int, checkpoints: Sequence[int]) -> list[int]:
    """min_{2<=h<=m} ||(h*step - offset)/den|| (numerators) at each checkpoint m."""
    out: list[int] = []
    if not checkpoints:
        return out
    last = max(checkpoints)
    want = set(checkpoints)
    r = (2 * step - offset) % den
    best = den
    for h in range(2, last + 1):
        d = r if 2 * r <= den else den - r
        if d < best:
            best = d
        if h in want:
            out.append(best)
        r += step
        if r >= den:
            r -= den
    return out


def _min_chords(lam_j: RotationNumber, targets: Sequence[RotationNumber],
                checkpoints: Sequence[int], dps: int) -> list:
    """min_{2<=h<=m} min_i |lambda_j^h - lambda_i| at each checkpoint."""
    if min(checkpoints) < 2:
        raise ValueError("m must be >= 2")
    nums, den, errs = _common([lam_j, *targets])
    top = max(checkpoints)
    err_top = top * errs[0] + max(errs[1:])
    _check_digits(err_top, f"reduction up to h = {top}")
    per_target = [_running_min_dist(nums[0], n_i, den, checkpoints) for n_i in nums[1:]]
    best = [min(col) for col in zip(*per_target)]
    out = []
    for b, m in zip(best, checkpoints):
        if b == 0 and err_top == 0:
            out.append(mpmath.mpf(0))
        elif err_top and Fraction(b, den) <= m * errs[0] + max(errs[1:]):
            raise PrecisionExhausted(f"small divisor at m = {m} is below the representation error")
        else:
            out.append(_chord(b, den, dps))
    return out


def omega(lam: RotationNumber, m: int, dps: int = DEFAULT_DPS):
    """min_{2<=h<=m} |lambda^h - lambda| (an mpmath number)."""
    if m < 2:
        raise ValueError("m must be >= 2")
    return _min_chords(lam, [lam], [m], dps)[0]


def omega_j(lambdas: Sequence[RotationNumber], j: int, m: int, dps: int = DEFAULT_DPS):
    """min_{2<=h<=m} min_i |lambda_j^h - lambda_i| with j 0-based."""
    return _min_chords(lambdas[j], list(lambdas), [m], dps)[0]


@dataclass
class SmallDivisorReport:
    m_values: list[int]
    omega_values: list[float]
    partial_sums: list[float]
    verdict: str                       # brjuno-plausible | root-of-unity | inconclusive
    stagnation: float | None = None    # S_K - S_{K-2}
    tolerance: float = STAGNATION_TOL

    def to_dict(self) -> dict:
        return {
            "m_values": self.m_values,
            "omega_values": self.omega_values,
            "partial_sums": self.partial_sums,
            "verdict": self.verdict,
            "stagnation": self.stagnation,
            "tolerance": self.tolerance,
        }


def _brjuno_from_omegas(omegas: list, K_max: int, tol: float, dps: int) -> SmallDivisorReport:
    m_values = [2 ** (k + 1) for k in range(K_max + 1)]
    if any(w == 0 for w in omegas):
        k0 = next(i for i, w in enumerate(omegas) if w == 0)
        raise RootOfUnity(f"omega({m_values[k0]}) = 0")
    sums = []
    with mpmath.workdps(dps):
        acc = mpmath.mpf(0)
        for k, w in enumerate(omegas):
            acc += mpmath.log(1 / w) / mpmath.mpf(2) ** k
            sums.append(acc)
    stag = float(sums[-1] - sums[-3]) if K_max >= 2 else None
    verdict = "brjuno-plausible" if stag is not None and stag < tol else "inconclusive"
    return SmallDivisorReport(
        m_values=m_values,
        omega_values=[float(w) for w in omegas],
        partial_sums=[float(s) for s in sums],
        verdict=verdict,
        stagnation=stag,
        tolerance=tol,
    )


def brjuno_partial_sums(lam: RotationNumber, K_max: int, tol: float = STAGNATION_TOL,
                        dps: int = DEFAULT_DPS) -> SmallDivisorReport:
    """S_K = sum_{k<=K} 2^-k log(1/omega(2^(k+1))) for K = 0..K_max."""
    if K_max < 0:
        raise ValueError("K_max must be >= 0")
    checkpoints = [2 ** (k + 1) for k in range(K_max + 1)]
    return _brjuno_from_omegas(_min_chords(lam, [lam], checkpoints, dps), K_max, tol, dps)


def admissible_partial_sums(lambdas: Sequence[RotationNumber], K_max: int,
                            tol: float = STAGNATION_TOL,
                            dps: int = DEFAULT_DPS) -> list[SmallDivisorReport]:
    """One Brjuno-type report per coordinate j, built on omega_j."""
    if K_max < 0:
        raise ValueError("K_max must be >= 0")
    checkpoints = [2 ** (k + 1) for k in range(K_max + 1)]
    return [
        _brjuno_from_omegas(_min_chords(lam_j, list(lambdas), checkpoints, dps), K_max, tol, dps)
        for lam_j in lambdas
    ]


@dataclass(frozen=True)
class ResonanceHit:
    j: int                   # 0-based target coordinate
    multi_index: tuple[int, ...]
    gap: float               # |lambda_j - lambda^m|
    allowed: bool


@dataclass
class ResonanceReport:
    ok: bool
    violations: list[ResonanceHit] = field(default_factory=list)
    near_misses: list[ResonanceHit] = field(default_factory=list)
    index_gap: float = 0.0   # |lambda_1 ... lambda_k - 1|
    checked: int = 0

    def to_dict(self) -> dict:
        hit = lambda h: {"j": h.j + 1, "m": list(h.multi_index), "gap": h.gap}
        return {
            "one_resonant": self.ok,
            "violations": [hit(h) for h in self.violations],
            "near_misses": [hit(h) for h in self.near_misses],
            "index_gap": self.index_gap,
            "checked": self.checked,
        }


def _multi_indices(k: int, lo: int, hi: int):
    for total in range(lo, hi + 1):
        for cut in itertools.combinations(range(total + k - 1), k - 1):
            bounds = (-1, *cut, total + k - 1)
            yield tuple(bounds[i + 1] - bounds[i] - 1 for i in range(k))


def _is_allowed(m: tuple[int, ...], j: int) -> bool:
    t = m[(j + 1) % len(m)]
    return t >= 1 and all(mi == t + (i == j) for i, mi in enumerate(m))


def check_one_resonant(lambdas: Sequence[RotationNumber], degree_bound: int,
                       tol: float = RESONANCE_TOL, warn: float = NEAR_MISS_TOL,
                       dps: int = DEFAULT_DPS) -> ResonanceReport:
    """Scan 2 <= |m| <= degree_bound for resonances lambda_j = lambda^m.

    Resonances of the form m = e_j + t(1,...,1) are expected.  Any other
    resonance is a violation.  A product lambda_1...lambda_k that is not 1
    is also reported (as an index-violation with multi-index (1,...,1)),
    since then the expected resonances are absent.
    """
    k = len(lambdas)
    if k < 2 or degree_bound < 2:
        raise ValueError("need k >= 2 and degree_bound >= 2")
    nums, den, errs = _common(list(lambdas))
    _check_digits(degree_bound * max(errs) + max(errs), "resonance scan")

    def gap_of(total: int) -> float:
        r = total % den
        return float(_chord(min(r, den - r), den, dps))

    report = ResonanceReport(ok=True)
    report.index_gap = gap_of(sum(nums))
    if report.index_gap >= tol:
        report.ok = False
        report.violations.append(ResonanceHit(-1, (1,) * k, report.index_gap, False))
    for m in _multi_indices(k, 2, degree_bound):
        base = sum(mi * ni for mi, ni in zip(m, nums))
        for j in range(k):
            report.checked += 1
            gap = gap_of(base - nums[j])
            if gap >= warn:
                continue
            hit = ResonanceHit(j, m, gap, _is_allowed(m, j))
            if hit.allowed:
                continue
            if gap < tol:
                report.ok = False
                report.violations.append(hit)
            else:
                report.near_misses.append(hit)
    return report


def liouville_like(terms: int = 4) -> RotationNumber:
    """sum_{n=1}^{terms} 10^(-n!), an exact rational close to a Liouville number."""
    return RotationNumber.from_fraction(
        sum(Fraction(1, 10 ** math.factorial(n)) for n in range(1, terms + 1)),
        f"liouville[{terms}]",
    )
