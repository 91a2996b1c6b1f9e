"""Compiled inner loops: germ stepping, basin membership, batch classifiers.

Perturbation terms arrive as flat arrays (target, coefficient, exponents) so
one compiled kernel serves every GermSpec.  Batch kernels parallelize over
points with prange; each point's orbit is serial and results are written by
index, so output does not depend on the thread count.
"""
from __future__ import annotations

import os

import numba
import numpy as np
from numba import config, njit, prange

if "NUMBA_THREADING_LAYER" not in os.environ:
    # the TBB build shipped with some distributions is too old for numba
    config.THREADING_LAYER = "workqueue"


def set_threads(n: int | None) -> int:
    """Clamp and apply a thread count for the parallel kernels."""
    if n:
        numba.set_num_threads(max(1, min(int(n), config.NUMBA_NUM_THREADS)))
    return numba.get_num_threads()

# verdict codes shared with basin.py
IN_BASIN = 0
AXIS = 1
ESCAPED = 2
UNDETERMINED = 3
RATIO_VIOLATION = 4


@njit(cache=True)
def step(z, out, lam, tgt, coef, exps):
    k = z.shape[0]
    u = 1.0 + 0.0j
    for j in range(k):
        u *= z[j]
    f = 1.0 - u / k
    for j in range(k):
        out[j] = lam[j] * z[j] * f
    for t in range(tgt.shape[0]):
        m = coef[t]
        for j in range(k):
            e = exps[t, j]
            b = z[j]
            while e:
                if e & 1:
                    m *= b
                e >>= 1
                if e:
                    b *= b
        out[tgt[t]] += m


@njit(cache=True)
def in_b(z, beta, R, slope):
    """Membership in B; ``slope`` = tan(theta) so that |Arg u| < theta
    reads Re u > 0 and |Im u| < slope * Re u.  Moduli are compared squared."""
    k = z.shape[0]
    u = 1.0 + 0.0j
    for j in range(k):
        u *= z[j]
    if u == 0:
        return False
    c = 0.5 / R
    d = u - c
    if d.real * d.real + d.imag * d.imag >= c * c:
        return False
    if not (u.real > 0 and abs(u.imag) < slope * u.real):
        return False
    bound = (u.real * u.real + u.imag * u.imag) ** beta
    for j in range(k):
        zj = z[j]
        if zj.real * zj.real + zj.imag * zj.imag >= bound:
            return False
    return True


@njit(cache=True)
def _sup(z):
    m = 0.0
    for j in range(z.shape[0]):
        a = abs(z[j])
        if a > m:
            m = a
    return m


@njit(cache=True)
def trace(p, n_max, escape, lam, tgt, coef, exps):
    """Orbit of one point; returns (points, status, stop) with status
    0 completed, 1 escaped, 2 hit_zero."""
    k = p.shape[0]
    pts = np.empty((n_max + 1, k), dtype=np.complex128)
    pts[0] = p
    u0 = 1.0 + 0.0j
    for j in range(k):
        u0 *= p[j]
    for n in range(1, n_max + 1):
        step(pts[n - 1], pts[n], lam, tgt, coef, exps)
        if _sup(pts[n]) > escape:
            return pts[: n + 1], 1, n
        if u0 != 0:
            u = 1.0 + 0.0j
            for j in range(k):
                u *= pts[n, j]
            if u == 0:
                return pts[: n + 1], 2, n
    return pts, 0, n_max


@njit(parallel=True, cache=True)
def first_exit(P, horizon, beta, R, slope, lam, tgt, coef, exps):
    """First step at which each orbit leaves B (-1 if it never does)."""
    N, k = P.shape
    out = np.full(N, -1, dtype=np.int64)
    for i in prange(N):
        z = P[i].copy()
        w = np.empty(k, dtype=np.complex128)
        if not in_b(z, beta, R, slope):
            out[i] = 0
            continue
        for n in range(1, horizon + 1):
            step(z, w, lam, tgt, coef, exps)
            z, w = w, z
            if not in_b(z, beta, R, slope):
                out[i] = n
                break
    return out


@njit(parallel=True, cache=True)
def classify_hits(P, n_max, escape, beta, R, slope, lam, tgt, coef, exps):
    """Basin membership by first entry into B."""
    N, k = P.shape
    codes = np.full(N, UNDETERMINED, dtype=np.int8)
    steps = np.full(N, n_max, dtype=np.int64)
    for i in prange(N):
        z = P[i].copy()
        w = np.empty(k, dtype=np.complex128)
        for n in range(n_max + 1):
            zero = False
            for j in range(k):
                if z[j] == 0:
                    zero = True
            if zero:
                codes[i] = AXIS
                steps[i] = n
                break
            if in_b(z, beta, R, slope):
                codes[i] = IN_BASIN
                steps[i] = n
                break
            if _sup(z) > escape:
                codes[i] = ESCAPED
                steps[i] = n
                break
            if n < n_max:
                step(z, w, lam, tgt, coef, exps)
                z, w = w, z
    return codes, steps


@njit(parallel=True, cache=True)
def classify_ratio(P, n_max, escape, decay, window, band, cap, lam, tgt, coef, exps):
    """Basin membership from orbit decay with comparable coordinate moduli.

    in_basin once the sup-norm is below ``decay``, has decreased at every one
    of the last ``window`` steps, and the max/min modulus ratio stayed within
    a factor ``band`` over that window.  A decaying orbit whose ratio exceeds
    ``cap`` is a ratio violation.
    """
    N, k = P.shape
    codes = np.full(N, UNDETERMINED, dtype=np.int8)
    steps = np.full(N, n_max, dtype=np.int64)
    for i in prange(N):
        z = P[i].copy()
        w = np.empty(k, dtype=np.complex128)
        ratios = np.empty(window, dtype=np.float64)
        prev = np.inf
        falling = 0
        for n in range(n_max + 1):
            lo = np.inf
            hi = 0.0
            for j in range(k):
                a = abs(z[j])
                if a < lo:
                    lo = a
                if a > hi:
                    hi = a
            if lo == 0:
                codes[i] = AXIS
                steps[i] = n
                break
            if hi > escape:
                codes[i] = ESCAPED
                steps[i] = n
                break
            r = hi / lo
            ratios[n % window] = r
            falling = falling + 1 if hi < prev else 0
            prev = hi
            if hi < decay and falling >= window:
                if r > cap:
                    codes[i] = RATIO_VIOLATION
                    steps[i] = n
                    break
                rmin = np.inf
                rmax = 0.0
                for q in range(window):
                    if ratios[q] < rmin:
                        rmin = ratios[q]
                    if ratios[q] > rmax:
                        rmax = ratios[q]
                if rmax <= band * rmin:
                    codes[i] = IN_BASIN
                    steps[i] = n
                    break
            if n < n_max:
                step(z, w, lam, tgt, coef, exps)
                z, w = w, z
    return codes, steps


@njit(parallel=True, cache=True)
def advance(P, n, lam, tgt, coef, exps):
    """F^n applied to every row (n may differ per row)."""
    N, k = P.shape
    out = P.copy()
    for i in prange(N):
        z = out[i].copy()
        w = np.empty(k, dtype=np.complex128)
        for _ in range(n[i]):
            step(z, w, lam, tgt, coef, exps)
            z, w = w, z
        out[i] = z
    return out
