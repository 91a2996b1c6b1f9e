"""Region predicates, the Phi change of variables, sampling and R calibration.

    S(R, theta) = {|zeta - 1/(2R)| < 1/(2R), |Arg zeta| < theta}   (horodisc sector)
    H(R, theta) = {Re zeta > R, |Arg zeta| < theta}                 (its image under 1/zeta)
    W(beta)     = {|z_j| < |u|^beta for all j}
    B           = W(beta) intersected with {u in S(R, theta)}

All inequalities are strict and Arg is the principal argument.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .errors import CalibrationFailed, RejectionOverflow
from .germ import DEFAULT_BETA, GermSpec

__all__ = [
    "DEFAULT_THETA",
    "SectorParams",
    "BasinParams",
    "in_sector_S",
    "in_H",
    "in_W",
    "in_B",
    "phi_coordinates",
    "phi_inverse",
    "sample_B",
    "calibrate_R",
    "point_rng",
]

DEFAULT_THETA = math.pi / 4
R_MIN = 0.5
R_MAX = 1024.0
SAMPLE_DECADES = 3.0
MAX_ATTEMPTS = 2000


@dataclass(frozen=True)
class SectorParams:
    R: float
    theta: float
    certificate: dict | None = field(default=None, compare=False)

    def __post_init__(self) -> None:
        if not self.R > 0:
            raise ValueError("R must be positive")
        if not 0 < self.theta < math.pi / 2:
            raise ValueError("theta must lie in (0, pi/2)")

    @property
    def slope(self) -> float:
        return math.tan(self.theta)


@dataclass(frozen=True)
class BasinParams:
    beta: float
    sector: SectorParams

    def __post_init__(self) -> None:
        if not 0 < self.beta < 0.5:
            raise ValueError("beta must lie in (0, 1/2)")

    @property
    def R(self) -> float:
        return self.sector.R

    @property
    def theta(self) -> float:
        return self.sector.theta

    def check_dimension(self, k: int) -> None:
        if not self.beta < 1.0 / k:
            raise ValueError(f"beta must be < 1/{k} in dimension {k}")

    def scaled(self, factor: float) -> BasinParams:
        return BasinParams(self.beta, SectorParams(self.R * factor, self.theta))


def _abs2(z):
    return z.real * z.real + z.imag * z.imag


def _in_angle(zeta, s: SectorParams):
    # |Arg zeta| < theta with theta < pi/2, written without atan2 so the
    # compiled kernels and these predicates agree bit for bit
    return (zeta.real > 0) & (np.abs(zeta.imag) < s.slope * zeta.real)


def in_sector_S(zeta, s: SectorParams):
    zeta = np.asarray(zeta, dtype=np.complex128)
    c = 0.5 / s.R
    out = (zeta != 0) & (_abs2(zeta - c) < c * c) & _in_angle(zeta, s)
    return out if out.ndim else bool(out)


def in_H(zeta, s: SectorParams):
    zeta = np.asarray(zeta, dtype=np.complex128)
    out = (zeta.real > s.R) & _in_angle(zeta, s)
    return out if out.ndim else bool(out)


def in_W(p, beta: float):
    p = np.asarray(p, dtype=np.complex128)
    u = np.prod(p, axis=-1)
    bound = _abs2(u) ** beta
    out = (u != 0) & np.all(_abs2(p) < bound[..., None], axis=-1)
    return out if out.ndim else bool(out)


def in_B(p, bp: BasinParams):
    p = np.asarray(p, dtype=np.complex128)
    out = np.asarray(in_W(p, bp.beta)) & np.asarray(in_sector_S(np.prod(p, axis=-1), bp.sector))
    return out if out.ndim else bool(out)


def phi_coordinates(p) -> np.ndarray:
    """(u, y_2, ..., y_k) with y_j = z_j ... z_k."""
    p = np.asarray(p, dtype=np.complex128)
    tails = np.cumprod(p[..., ::-1], axis=-1)[..., ::-1]
    return tails


def phi_inverse(y) -> np.ndarray:
    """Inverse of phi_coordinates off {u = 0}: z_j = y_j / y_{j+1}, z_k = y_k."""
    y = np.asarray(y, dtype=np.complex128)
    z = np.empty_like(y)
    z[..., :-1] = y[..., :-1] / y[..., 1:]
    z[..., -1] = y[..., -1]
    return z


def point_rng(seed: int, index: int) -> np.random.Generator:
    """Counter-based stream for sample ``index`` under ``seed``."""
    if seed < 0 or index < 0:
        raise ValueError("seed and index must be non-negative")
    return np.random.Generator(np.random.Philox(key=(seed % 2**64) << 64 | index))


def _draw_one(rng: np.random.Generator, bp: BasinParams, k: int, decades: float,
              max_attempts: int) -> np.ndarray | None:
    R, theta, beta = bp.R, bp.theta, bp.beta
    log_top = min(0.0, math.log(1.0 / R))
    log_bot = log_top - decades * math.log(10.0)
    width = 1.0 - k * beta
    for _ in range(max_attempts):
        arg = rng.uniform(-theta, theta)
        log_r = rng.uniform(log_bot, log_top)
        u = complex(math.exp(log_r) * math.cos(arg), math.exp(log_r) * math.sin(arg))
        if not in_sector_S(u, bp.sector):
            continue
        t = -log_r
        s = beta * t + t * width * rng.dirichlet(np.ones(k))
        phases = rng.uniform(-math.pi, math.pi, size=k)
        phases[-1] = arg - phases[:-1].sum()
        z = np.exp(-s + 1j * phases)
        if in_B(z, bp):
            return z
    return None


def sample_B(bp: BasinParams, n: int, seed: int, k: int = 2,
             decades: float = SAMPLE_DECADES, max_attempts: int = MAX_ATTEMPTS) -> np.ndarray:
    """n points of B, shape (n, k); point i depends only on (seed, i).

    u is log-uniform in modulus over ``decades`` decades below min(1, 1/R) and
    uniform in argument, kept when it lies in S(R, theta).  The log-moduli
    -log|z_j| are uniform on the simplex cut out by the wedge, and phases are
    uniform subject to their sum matching Arg u.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    bp.check_dimension(k)
    out = np.empty((n, k), dtype=np.complex128)
    for i in range(n):
        z = _draw_one(point_rng(seed, i), bp, k, decades, max_attempts)
        if z is None:
            raise RejectionOverflow(
                f"no point of B found in {max_attempts} attempts (beta={bp.beta}, "
                f"R={bp.R}, theta={bp.theta})"
            )
        out[i] = z
    return out


def first_exit(spec: GermSpec, bp: BasinParams, P: np.ndarray, horizon: int) -> np.ndarray:
    """Compiled scan: first step each orbit leaves B, -1 if it stays."""
    tgt, coef, exps = spec.kernel_terms
    return _kernels.first_exit(np.ascontiguousarray(P, dtype=np.complex128), int(horizon),
                               float(bp.beta), float(bp.R), bp.sector.slope,
                               spec.lam, tgt, coef, exps)


def calibrate_R(spec: GermSpec, beta: float = DEFAULT_BETA, theta: float = DEFAULT_THETA,
                samples: int = 1000, horizon: int = 10_000, seed: int = 0,
                R_min: float = R_MIN, R_max: float = R_MAX) -> SectorParams:
    """Smallest R = 2^j R_min (up to R_max) whose sampled orbits never leave B.

    The returned SectorParams carries a certificate with the sample count,
    horizon, seed and the violation counts seen along the schedule.
    """
    if spec.perturbation and beta * (spec.l + 1) < 4:
        raise ValueError("beta (l+1) >= 4 is required for perturbed germs")
    tried = []
    R = R_min
    while R <= R_max * (1 + 1e-12):
        sector = SectorParams(R, theta)
        bp = BasinParams(beta, sector)
        bp.check_dimension(spec.k)
        exits = first_exit(spec, bp, sample_B(bp, samples, seed, spec.k), horizon)
        bad = int(np.count_nonzero(exits >= 0))
        tried.append({"R": R, "violations": bad})
        if bad == 0:
            cert = {"samples": samples, "horizon": horizon, "seed": seed, "beta": beta,
                    "theta": theta, "schedule": tried}
            return SectorParams(R, theta, certificate=cert)
        R *= 2.0
    raise CalibrationFailed(f"no R <= {R_max} kept {samples} orbits in B for {horizon} steps: {tried}")
