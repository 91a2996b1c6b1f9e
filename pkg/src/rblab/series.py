"""Formal asymptotic expansions for the 1D reduction u -> u(1 - u/k)^k.

With x = u = 1/U and L = log U = -log u the map reads

    x' = x (1 - x/k)^k,        L' = L - k log(1 - x/k).

The Abel solution phi(U) = U - c log U + sum_i a_i x^i is a formal series in x
alone once c = (k+1)/(2k).  The twist correction Theta solves

    Theta(U) - Theta(U') = k log(1 - x/k) + 1/phi(U)

with Theta = sum_{i>=1} sum_{p<=i} b[i, p] x^i L^p.  Both series are used to
close off the slowly converging tails of the orbit-based coordinate limits.

Series are stored as dense tables S[i][p] (coefficient of x^i L^p) of exact
Fractions, truncated at a fixed x-degree.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import comb

import numpy as np

__all__ = ["TailSeries", "tail_series", "regression_constant"]

Table = list[list[Fraction]]


def regression_constant(k: int) -> Fraction:
    """Second-order coefficient of (1 - u/k)^(-k), i.e. (k+1)/(2k)."""
    return Fraction(k + 1, 2 * k)


def _zero(n: int) -> Table:
    return [[Fraction(0)] * (n + 1) for _ in range(n + 1)]


def _from_x(coeffs: list[Fraction], n: int) -> Table:
    out = _zero(n)
    for i, v in enumerate(coeffs[: n + 1]):
        out[i][0] = Fraction(v)
    return out


def _add(a: Table, b: Table, scale: Fraction = Fraction(1)) -> Table:
    return [[x + scale * y for x, y in zip(ra, rb)] for ra, rb in zip(a, b)]


def _mul(a: Table, b: Table) -> Table:
    n = len(a) - 1
    out = _zero(n)
    for i, ra in enumerate(a):
        for p, va in enumerate(ra):
            if not va:
                continue
            for j in range(n + 1 - i):
                rb = b[j]
                for q in range(n + 1 - p):
                    if rb[q]:
                        out[i + j][p + q] += va * rb[q]
    return out


def _inverse(f: Table) -> Table:
    """1/f for f with f[0] = [1, 0, ...]."""
    if f[0][0] != 1 or any(f[0][1:]):
        raise ArithmeticError("series inverse needs unit constant term")
    n = len(f) - 1
    y = _zero(n)
    y[0][0] = Fraction(1)
    for m in range(1, n + 1):
        acc = [Fraction(0)] * (n + 1)
        for j in range(1, m + 1):
            fj, yr = f[j], y[m - j]
            for p, vp in enumerate(fj):
                if not vp:
                    continue
                for q in range(n + 1 - p):
                    if yr[q]:
                        acc[p + q] -= vp * yr[q]
        y[m] = acc
    return y


@dataclass(frozen=True)
class TailSeries:
    k: int
    order: int
    c: Fraction
    a: tuple[Fraction, ...]                # a[i-1] multiplies x^i
    b: tuple[tuple[Fraction, ...], ...]    # b[i-1][p] multiplies x^i L^p

    def phi_tail(self, x: np.ndarray) -> np.ndarray:
        """sum_i a_i x^i (Horner)."""
        acc = np.zeros_like(x)
        for coef in reversed(self.a):
            acc = (acc + float(coef)) * x
        return acc

    def theta(self, x: np.ndarray, L: np.ndarray) -> np.ndarray:
        acc = np.zeros_like(x)
        for row in reversed(self.b):
            poly = np.zeros_like(x)
            for coef in reversed(row):
                poly = poly * L + float(coef)
            acc = (acc + poly) * x
        return acc


@lru_cache(maxsize=None)
def tail_series(k: int, order: int = 8) -> TailSeries:
    """Solve for the Abel-series and twist-series coefficients up to x^order."""
    if k < 2 or order < 1:
        raise ValueError("need k >= 2 and order >= 1")
    n = order + 1
    kk = Fraction(k)
    c = regression_constant(k)
    # U'/U = (1 - x/k)^(-k) and L' - L = -k log(1 - x/k)
    ratio = [Fraction(comb(k + i - 1, i)) / kk**i for i in range(n + 2)]
    dlog = _from_x([Fraction(0)] + [kk / (i * kk**i) for i in range(1, n + 1)], n)
    xp = _from_x([Fraction(0)] + [Fraction(comb(k, i - 1)) * (-1 / kk) ** (i - 1)
                                  for i in range(1, min(k + 1, n) + 1)], n)
    xp_pow = [_from_x([Fraction(1)], n)]
    for _ in range(order):
        xp_pow.append(_mul(xp_pow[-1], xp))

    # phi(U') - phi(U) - 1 = 0, solved order by order for a_1..a_order
    base = _from_x([ratio[i + 1] for i in range(n + 1)], n)
    base[0][0] -= 1
    base = _add(base, dlog, -c)
    a: list[Fraction] = []
    for m in range(2, n + 1):
        resid = base
        for i, ai in enumerate(a, start=1):
            resid = _add(resid, xp_pow[i], ai)
            resid[i][0] -= ai
        if m == 2 and (resid[0][0] or resid[1][0]):
            raise ArithmeticError("Abel series: low-order terms do not cancel")
        a.append(resid[m][0] / (m - 1))

    # twist series
    phi_x = _from_x([Fraction(1)] + [Fraction(0)] + a, n)
    phi_x[1][1] = -c
    inv_phi = _inverse(phi_x)
    h = _zero(n)
    for i in range(n):
        h[i + 1] = inv_phi[i]
    h = _add(h, dlog, Fraction(-1))

    lp_pow = [_from_x([Fraction(1)], n)]
    lvar = _add(_zero(n), dlog)
    lvar[0][1] = Fraction(1)
    for _ in range(order):
        lp_pow.append(_mul(lp_pow[-1], lvar))
    shifted = {(i, p): _mul(xp_pow[i], lp_pow[p])
               for i in range(1, order + 1) for p in range(i + 1)}

    b: list[list[Fraction]] = []
    for m in range(2, n + 1):
        lhs = _zero(n)
        for i, row in enumerate(b, start=1):
            for p, v in enumerate(row):
                if v:
                    lhs = _add(lhs, shifted[(i, p)], -v)
                    lhs[i][p] += v
        resid = _add(h, lhs, Fraction(-1))[m]
        i = m - 1
        if any(resid[i + 1:]):
            raise ArithmeticError(f"twist series: inconsistent at order {m}")
        row = [Fraction(0)] * (i + 1)
        for p in range(i, -1, -1):
            nxt = row[p + 1] if p + 1 <= i else Fraction(0)
            row[p] = (resid[p] + (p + 1) * nxt) / i
        b.append(row)
    return TailSeries(k=k, order=order, c=c, a=tuple(a), b=tuple(tuple(r) for r in b))
