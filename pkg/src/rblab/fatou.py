"""Fatou coordinate psi, twisted coordinates sigma_j, the chart Q and its probes.

Orbit-based approximants (u_m = resonant product of F^m p, U_m = 1/u_m):

    psi_m       = U_m - m + c log u_m
    sigma_{j,n} = Lambda_j^{-n} Pi_j(F^n p) exp(e_j sum_{i<n} 1/(psi + i))

with Pi_j(z) = z_j ... z_k, Lambda_j = lambda_j ... lambda_k, e_j = (k-j+1)/k.
psi_m converges like 1/m and sigma_{j,n} like log(n)/n.  In accelerated mode
both are closed off with the formal tail series of the 1D reduction (see
series.py) once |u_m| is small, which leaves telescoping identities intact.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import _kernels
from .arithmetic import _common
from .errors import DomainError, OrbitDegenerate
from .germ import GermSpec, eval as F
from .orbit import ESCAPE_RADIUS
from .regions import BasinParams, in_B, phi_coordinates, phi_inverse, sample_B
from .series import regression_constant, tail_series

__all__ = [
    "U_SWITCH",
    "CoordinateEstimate",
    "FatouBatch",
    "default_c",
    "psi_m",
    "psi_sequence",
    "psi",
    "sigma_n",
    "sigma",
    "sigma_j",
    "Q",
    "fatou_batch",
    "psi_increment_rates",
    "jacobian_probe",
    "injectivity_probe",
    "invert_Q",
]

U_SWITCH = 2e-3
M_MIN = 8
SERIES_ORDER = 10
DEFAULT_TOL = 1e-8
DEFAULT_CAP = 200_000


def default_c(spec: GermSpec) -> float:
    return float(regression_constant(spec.k))


@dataclass
class CoordinateEstimate:
    value: complex
    depth: int
    last_increment: float
    converged: bool
    error_bound: float = math.nan

    def to_dict(self) -> dict:
        return {"re": self.value.real, "im": self.value.imag, "depth": self.depth,
                "last_increment": self.last_increment, "converged": self.converged,
                "error_bound": self.error_bound}


@dataclass
class FatouBatch:
    psi: np.ndarray            # (N,)
    sigma: np.ndarray          # (N, k-1): sigma_2 .. sigma_k
    psi_depth: np.ndarray
    sigma_depth: np.ndarray
    psi_increment: np.ndarray
    sigma_increment: np.ndarray
    tol: float

    @property
    def converged(self) -> np.ndarray:
        fp = np.maximum(self.tol, _ROUNDING_FLOOR * np.abs(self.psi))
        fs = np.maximum(self.tol, _ROUNDING_FLOOR * np.max(np.abs(self.sigma), axis=1, initial=0.0))
        return (self.psi_increment < fp) & (self.sigma_increment < fs)

    @property
    def images(self) -> np.ndarray:
        return np.column_stack([self.psi, self.sigma])


# helpers ----------------------------------------------------------------

def _multiplier_phase(spec: GermSpec, j: int) -> tuple[int, int]:
    """Lambda_j = exp(2 pi i num/den), j 0-based (coordinates j..k-1)."""
    nums, den, _ = _common(list(spec.lambdas))
    return sum(nums[j:]) % den, den


def _unit(num: int, den: int, n: int) -> complex:
    """exp(2 pi i n num / den) with the reduction done in integers."""
    return cmath.exp(2j * math.pi * (((n * num) % den) / den))


def _as_batch(spec: GermSpec, P) -> np.ndarray:
    P = np.asarray(P, dtype=np.complex128)
    if P.ndim == 1:
        P = P[None, :]
    if P.shape[1] != spec.k:
        raise ValueError(f"points must have {spec.k} coordinates")
    return P


_ROUNDING_FLOOR = 64 * np.finfo(float).eps


def _stop_rule(m, inc, u, tol, accelerate, u_switch, m_min, scale):
    # increments cannot drop below rounding of the value itself
    ok = (m >= m_min) & (inc < np.maximum(tol, _ROUNDING_FLOOR * scale))
    if accelerate:
        ok &= np.abs(u) <= u_switch
    return ok


# psi ----------------------------------------------------------------------

def _psi_pass(spec: GermSpec, P: np.ndarray, c: float, tol: float, cap: int,
              accelerate: bool, u_switch: float, m_min: int,
              depth: np.ndarray | None = None):
    N = P.shape[0]
    series = tail_series(spec.k, SERIES_ORDER)
    val = np.full(N, np.nan + 0j)
    dep = np.full(N, -1, dtype=np.int64)
    inc = np.full(N, np.inf)
    idx = np.arange(N)
    Z = P.copy()
    prev = None
    for m in range(cap + 1):
        u = np.prod(Z, axis=1)
        dead = u == 0
        if dead.any():
            dep[idx[dead]] = m
            keep = ~dead
            idx, Z, u = idx[keep], Z[keep], u[keep]
            prev = prev[keep] if prev is not None else None
            if idx.size == 0:
                break
        cur = 1.0 / u - m + c * np.log(u)
        if accelerate:
            cur = cur + series.phi_tail(u)
        d = np.abs(cur - prev) if prev is not None else np.full(idx.size, np.inf)
        if depth is not None:
            done = depth[idx] == m
        else:
            done = _stop_rule(m, d, u, tol, accelerate, u_switch, m_min, np.abs(cur))
        if m == cap:
            done = np.ones(idx.size, dtype=bool)
        if done.any():
            rows = idx[done]
            val[rows], dep[rows], inc[rows] = cur[done], m, d[done]
            keep = ~done
            idx, Z, cur = idx[keep], Z[keep], cur[keep]
        if idx.size == 0:
            break
        prev = cur
        Z = F(spec, Z)
    return val, dep, inc


def _sigma_pass(spec: GermSpec, P: np.ndarray, psi_vals: np.ndarray, js: Sequence[int],
                tol: float, cap: int, accelerate: bool, u_switch: float, m_min: int,
                depth: np.ndarray | None = None):
    """sigma_j for the 0-based coordinates j in js (each >= 1)."""
    N, k = P.shape
    series = tail_series(k, SERIES_ORDER)
    expo = np.array([(k - j) / k for j in js])
    phases = [_multiplier_phase(spec, j) for j in js]
    val = np.full((N, len(js)), np.nan + 0j)
    dep = np.full(N, -1, dtype=np.int64)
    inc = np.full(N, np.inf)
    idx = np.arange(N)
    Z = P.copy()
    psi_v = psi_vals.copy()
    S = np.zeros(N, dtype=np.complex128)
    prev = None
    for m in range(cap + 1):
        u = np.prod(Z, axis=1)
        tails = np.cumprod(Z[:, ::-1], axis=1)[:, ::-1]
        twist = np.array([_unit(den - num, den, m) for num, den in phases])
        logw = S[:, None] * expo[None, :]
        if accelerate:
            with np.errstate(divide="ignore", invalid="ignore"):
                theta = series.theta(u, -np.log(u))
            logw = logw + theta[:, None] * expo[None, :]
        cur = twist[None, :] * tails[:, js] * np.exp(logw)
        d = (np.max(np.abs(cur - prev), axis=1) if prev is not None
             else np.full(idx.size, np.inf))
        if depth is not None:
            done = depth[idx] == m
        else:
            done = _stop_rule(m, d, u, tol, accelerate, u_switch, m_min,
                              np.max(np.abs(cur), axis=1))
        done |= u == 0
        if m == cap:
            done = np.ones(idx.size, dtype=bool)
        if done.any():
            rows = idx[done]
            val[rows], dep[rows], inc[rows] = cur[done], m, d[done]
            keep = ~done
            idx, Z, cur, psi_v, S = idx[keep], Z[keep], cur[keep], psi_v[keep], S[keep]
        if idx.size == 0:
            break
        prev = cur
        S = S + 1.0 / (psi_v + m)
        Z = F(spec, Z)
    return val, dep, inc


def fatou_batch(spec: GermSpec, P, c: float | None = None, tol: float = DEFAULT_TOL,
                cap: int = DEFAULT_CAP, accelerate: bool = True, u_switch: float = U_SWITCH,
                m_min: int = M_MIN, depth: np.ndarray | None = None,
                sigma_depth: np.ndarray | None = None) -> FatouBatch:
    """psi and sigma_2..sigma_k for a batch of points.

    With ``depth`` (and optionally ``sigma_depth``) given, every approximant is
    evaluated at exactly that depth, which makes the result a smooth function
    of the point (used for finite differences and Newton solves).
    """
    P = _as_batch(spec, P)
    c = default_c(spec) if c is None else c
    pv, pd, pi = _psi_pass(spec, P, c, tol, cap, accelerate, u_switch, m_min, depth)
    sig = np.full((P.shape[0], spec.k - 1), np.nan + 0j)
    sd = np.full(P.shape[0], -1, dtype=np.int64)
    si = np.full(P.shape[0], np.inf)
    good = np.isfinite(pv) & (pv.real > 0)
    if good.any():
        sdep = None
        if sigma_depth is not None:
            sdep = sigma_depth[good]
        elif depth is not None:
            sdep = depth[good]
        sv, sdd, sii = _sigma_pass(spec, P[good], pv[good], list(range(1, spec.k)), tol, cap,
                                   accelerate, u_switch, m_min, sdep)
        sig[good], sd[good], si[good] = sv, sdd, sii
    return FatouBatch(pv, sig, pd, sd, pi, si, tol)


# single-point API -------------------------------------------------------

def psi_sequence(spec: GermSpec, c: float, p, m_max: int) -> np.ndarray:
    """psi_0 .. psi_{m_max} (plain approximants) along the orbit of p."""
    z = np.asarray(p, dtype=np.complex128)
    out = np.empty(m_max + 1, dtype=np.complex128)
    for m in range(m_max + 1):
        u = complex(np.prod(z))
        if u == 0:
            raise OrbitDegenerate(f"u vanished at step {m}")
        out[m] = 1.0 / u - m + c * cmath.log(u)
        if m < m_max:
            z = F(spec, z)
    return out


def psi_m(spec: GermSpec, c: float, p, m: int) -> complex:
    """U_m - m + c log u_m along the orbit of p."""
    if m < 0:
        raise ValueError("m must be >= 0")
    return complex(psi_sequence(spec, c, p, m)[-1])


def _error_bound(value: complex, depth: int, inc: float) -> float:
    return max(inc, 1e-16 * (depth + 1) ** 2 * max(1.0, abs(value)))


def psi(spec: GermSpec, c: float | None, p, tol: float = DEFAULT_TOL, m_cap: int = DEFAULT_CAP,
        accelerate: bool = True) -> CoordinateEstimate:
    c = default_c(spec) if c is None else c
    P = _as_batch(spec, p)
    val, dep, inc = _psi_pass(spec, P, c, tol, m_cap, accelerate, U_SWITCH, M_MIN)
    if not np.isfinite(val[0]):
        raise OrbitDegenerate(f"u vanished at step {dep[0]}")
    v, d, i = complex(val[0]), int(dep[0]), float(inc[0])
    ok = i < max(tol, _ROUNDING_FLOOR * abs(v))
    return CoordinateEstimate(v, d, i, bool(ok), _error_bound(v, d, i))


def sigma_n(spec: GermSpec, p, psi_value: complex, n: int, j: int | None = None) -> complex:
    """sigma_{j,n} (j 1-based, default k) from the plain product formula."""
    k = spec.k
    j = k if j is None else j
    if not 2 <= j <= k:
        raise ValueError("need 2 <= j <= k")
    if psi_value.real <= 0:
        raise DomainError("Re(psi) must be positive")
    num, den = _multiplier_phase(spec, j - 1)
    z = np.asarray(p, dtype=np.complex128)
    S = 0j
    for i in range(n):
        S += 1.0 / (psi_value + i)
        z = F(spec, z)
    e = (k - j + 1) / k
    return _unit(den - num, den, n) * complex(np.prod(z[j - 1:])) * cmath.exp(e * S)


def sigma_j(spec: GermSpec, p, psi_value: complex | None, j: int, tol: float = DEFAULT_TOL,
            n_cap: int = DEFAULT_CAP, c: float | None = None,
            accelerate: bool = True) -> CoordinateEstimate:
    """Limit of sigma_{j,n}; j is 1-based with 2 <= j <= k."""
    if not 2 <= j <= spec.k:
        raise ValueError("need 2 <= j <= k")
    if psi_value is None:
        psi_value = psi(spec, c, p, tol).value
    if psi_value.real <= 0:
        raise DomainError("Re(psi) must be positive")
    P = _as_batch(spec, p)
    val, dep, inc = _sigma_pass(spec, P, np.array([psi_value]), [j - 1], tol, n_cap,
                                accelerate, U_SWITCH, M_MIN)
    v, d, i = complex(val[0, 0]), int(dep[0]), float(inc[0])
    ok = i < max(tol, _ROUNDING_FLOOR * abs(v))
    return CoordinateEstimate(v, d, i, bool(ok), _error_bound(v, d, i))


def sigma(spec: GermSpec, p, tol: float = DEFAULT_TOL, n_cap: int = DEFAULT_CAP,
          psi_value: complex | None = None, c: float | None = None,
          accelerate: bool = True) -> CoordinateEstimate:
    """The last twisted coordinate sigma_k (the sigma of the planar case)."""
    return sigma_j(spec, p, psi_value, spec.k, tol, n_cap, c, accelerate)


def Q(spec: GermSpec, p, tol: float = DEFAULT_TOL, c: float | None = None) -> tuple[complex, ...]:
    """(psi, sigma_2, ..., sigma_k) at p."""
    b = fatou_batch(spec, p, c, tol)
    return (complex(b.psi[0]), *(complex(s) for s in b.sigma[0]))


# probes -------------------------------------------------------------------

def psi_increment_rates(spec: GermSpec, c: float, P, ms: Sequence[int]) -> list[tuple[int, float]]:
    """(m, max over points of |psi_{2m} - psi_m|) with plain approximants."""
    P = _as_batch(spec, P)
    top = 2 * max(ms)
    want = {m for m in ms} | {2 * m for m in ms}
    Z = P.copy()
    snap: dict[int, np.ndarray] = {}
    for m in range(top + 1):
        if m in want:
            u = np.prod(Z, axis=1)
            snap[m] = 1.0 / u - m + c * np.log(u)
        if m < top:
            Z = F(spec, Z)
    return [(m, float(np.max(np.abs(snap[2 * m] - snap[m])))) for m in ms]


def _chart_points(Uy: np.ndarray) -> np.ndarray:
    """Points with prescribed (U, y_2, ..., y_k)."""
    y = Uy.copy()
    y[:, 0] = 1.0 / Uy[:, 0]
    return phi_inverse(y)


def _jacobian(spec: GermSpec, Uy: np.ndarray, c: float, depth: np.ndarray,
              sdepth: np.ndarray, rel: float = 1e-6) -> tuple[np.ndarray, np.ndarray]:
    """Values and complex Jacobians of (U, y) -> (psi, sigma) at fixed depth."""
    N, k = Uy.shape
    h = rel * np.abs(Uy)
    stack = [Uy]
    for a in range(k):
        for sgn in (1, -1):
            shifted = Uy.copy()
            shifted[:, a] += sgn * h[:, a]
            stack.append(shifted)
    allp = _chart_points(np.concatenate(stack))
    rep = 2 * k + 1
    b = fatou_batch(spec, allp, c, depth=np.tile(depth, rep), sigma_depth=np.tile(sdepth, rep))
    img = b.images.reshape(rep, N, k)
    J = np.empty((N, k, k), dtype=np.complex128)
    for a in range(k):
        J[:, :, a] = (img[1 + 2 * a] - img[2 + 2 * a]) / (2 * h[:, a])[:, None]
    return img[0], J


def jacobian_probe(spec: GermSpec, r_values: Sequence[float], c: float | None = None) -> list[dict]:
    """Finite-difference Jacobian determinant of Q in (U, y) coordinates at
    the points with all coordinates equal to r, i.e. (U, y) = (r^-k, ..., r)."""
    c = default_c(spec) if c is None else c
    k = spec.k
    r = np.asarray(r_values, dtype=float)
    Uy = np.empty((r.size, k), dtype=np.complex128)
    Uy[:, 0] = r ** (-k)
    for a in range(1, k):
        Uy[:, a] = r ** (k - a)
    base = fatou_batch(spec, _chart_points(Uy), c)
    _, J = _jacobian(spec, Uy, c, base.psi_depth, base.sigma_depth)
    det = np.linalg.det(J)
    return [{"r": float(ri), "det_re": float(d.real), "det_im": float(d.imag),
             "abs_det_minus_1": float(abs(d - 1))} for ri, d in zip(r, det)]


@dataclass
class InjectivityReport:
    n_pairs: int
    collisions_Q: int
    collisions_psi_w: int
    min_ratio_Q: float
    min_ratio_psi_w: float
    image_tol: float

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def injectivity_probe(spec: GermSpec, bp_shrunk: BasinParams, n_pairs: int, seed: int,
                      tol: float = 1e-9, c: float | None = None,
                      near_fraction: float = 0.5, near_scale: float = 1e-6) -> InjectivityReport:
    """Sample pairs in B and look for coinciding images under Q and (psi, w).

    Half of the pairs are independent samples, the rest are small relative
    perturbations of a sample (kept only if still in B).  The reported ratio
    is min |image difference| / |point difference| (sup norms).
    """
    P = sample_B(bp_shrunk, n_pairs, seed, spec.k)
    Qp = sample_B(bp_shrunk, n_pairs, seed + 1, spec.k)
    n_near = int(n_pairs * near_fraction)
    if n_near:
        rng = np.random.default_rng(seed)
        jitter = near_scale * (rng.standard_normal((n_near, spec.k))
                               + 1j * rng.standard_normal((n_near, spec.k)))
        cand = P[:n_near] * (1 + jitter)
        ok = np.asarray(in_B(cand, bp_shrunk))
        # jittered points that left B fall back to the independent sample
        Qp[:n_near] = np.where(ok[:, None], cand, Qp[:n_near])
    both = fatou_batch(spec, np.concatenate([P, Qp]), c)
    img = both.images
    a, b = img[:n_pairs], img[n_pairs:]
    dp = np.max(np.abs(P - Qp), axis=1)
    dQ = np.max(np.abs(a - b), axis=1)
    pw_a = np.column_stack([a[:, 0], P[:, 1:]])
    pw_b = np.column_stack([b[:, 0], Qp[:, 1:]])
    dpw = np.max(np.abs(pw_a - pw_b), axis=1)
    distinct = dp > 0
    return InjectivityReport(
        n_pairs=int(distinct.sum()),
        collisions_Q=int(np.count_nonzero(distinct & (dQ < tol))),
        collisions_psi_w=int(np.count_nonzero(distinct & (dpw < tol))),
        min_ratio_Q=float(np.min(dQ[distinct] / dp[distinct])),
        min_ratio_psi_w=float(np.min(dpw[distinct] / dp[distinct])),
        image_tol=tol,
    )


@dataclass
class InversionResult:
    points: np.ndarray
    success: np.ndarray
    steps: np.ndarray
    residual: np.ndarray

    @property
    def success_rate(self) -> float:
        return float(np.mean(self.success))


def invert_Q(spec: GermSpec, targets, bp: BasinParams, c: float | None = None,
             max_steps: int = 50, tol: float = 1e-10, entry_horizon: int = 10_000) -> InversionResult:
    """Newton solve Q(p) = target for targets (a, b_2, ..., b_k).

    The unknown is the chart (U, y) with initial guess U = a, y_j = b_j
    (zw = 1/a, w = b in the planar case).  Approximant depths are frozen at
    the initial guess so each Newton step sees one smooth map.  A target is
    hit when the relative residual drops below ``tol`` and the solution's
    orbit enters B within ``entry_horizon`` steps, i.e. it lies in the basin
    where the computed limits are the global coordinates.
    """
    c = default_c(spec) if c is None else c
    T = np.asarray(targets, dtype=np.complex128)
    N, k = T.shape
    Uy = T.copy()
    first = fatou_batch(spec, _chart_points(Uy), c)
    depth, sdepth = first.psi_depth.copy(), first.sigma_depth.copy()
    depth[depth < 0] = M_MIN
    sdepth[sdepth < 0] = M_MIN
    scale = np.maximum(np.abs(T), 1e-300)
    resid = np.full(N, np.inf)
    steps = np.zeros(N, dtype=np.int64)
    active = np.ones(N, dtype=bool)
    for it in range(max_steps + 1):
        rows = np.flatnonzero(active)
        if rows.size == 0:
            break
        val, J = _jacobian(spec, Uy[rows], c, depth[rows], sdepth[rows])
        err = val - T[rows]
        r = np.max(np.abs(err) / scale[rows], axis=1)
        resid[rows] = r
        fin = (r < tol) | ~np.isfinite(r)
        active[rows[fin]] = False
        steps[rows] = it
        if it == max_steps:
            break
        upd = ~fin
        if not upd.any():
            continue
        ok = np.isfinite(J[upd]).all(axis=(1, 2))
        sub = rows[upd][ok]
        delta = np.linalg.solve(J[upd][ok], err[upd][ok][..., None])[..., 0]
        Uy[sub] = Uy[sub] - delta
        active[rows[upd][~ok]] = False
    pts = _chart_points(Uy)
    tgt, coef, exps = spec.kernel_terms
    codes, _ = _kernels.classify_hits(np.ascontiguousarray(pts), entry_horizon, ESCAPE_RADIUS,
                                      bp.beta, bp.R, bp.sector.slope, spec.lam, tgt, coef, exps)
    success = (resid < tol) & (codes == _kernels.IN_BASIN)
    return InversionResult(points=pts, success=success, steps=steps, residual=resid)
