"""Hyperbolic distance on the punctured disc through the covering w -> e^w.

The left half-plane {Re w < 0} carries the metric |dw| / |Re w| (curvature
-1), and the punctured-disc distance is the minimum over deck translates
w + 2 pi i n.  With this normalization radial pairs satisfy

    d(e^-a, e^-b) = |log(a/b)|

and the two-sided bound |log(log|z1| / log|z2|)| +- g(z1, z2) holds with
g = 2 pi max(-1/log|z1|, -1/log|z2|).  ``curvature=-4`` selects the other
common convention, which halves every distance.
"""
from __future__ import annotations

import math

import numpy as np

from .errors import DomainError

__all__ = [
    "DECK_WINDOW",
    "halfplane_distance",
    "punctured_disc_distance",
    "radial_term",
    "g_term",
    "distance_bounds",
    "separation_bound",
    "separation_pairs",
]

DECK_WINDOW = 16
_SCALE = {-1: 1.0, -4: 0.5}


def _scale(curvature: int) -> float:
    try:
        return _SCALE[curvature]
    except KeyError:
        raise ValueError("curvature must be -1 or -4") from None


def halfplane_distance(w1, w2, curvature: int = -1):
    """Distance in {Re w < 0}: arccosh(1 + |w1-w2|^2 / (2 |Re w1| |Re w2|)).

    Evaluated as 2 asinh(|w1-w2| / (2 sqrt(|Re w1| |Re w2|))), which is the
    same quantity without cancellation for nearby points.
    """
    w1 = np.asarray(w1, dtype=np.complex128)
    w2 = np.asarray(w2, dtype=np.complex128)
    if np.any(w1.real >= 0) or np.any(w2.real >= 0):
        raise DomainError("half-plane points need Re w < 0")
    d = 2.0 * np.arcsinh(np.abs(w1 - w2) / (2.0 * np.sqrt(w1.real * w2.real)))
    d = _scale(curvature) * d
    return d if d.ndim else float(d)


def _check_disc(z: np.ndarray) -> None:
    r = np.abs(z)
    if np.any(r <= 0) or np.any(r >= 1):
        raise DomainError("punctured-disc points need 0 < |z| < 1")


def punctured_disc_distance(z1, z2, deck_window: int = DECK_WINDOW, curvature: int = -1):
    """min over |n| <= deck_window of the half-plane distance between
    log z1 and log z2 + 2 pi i n (principal logarithms)."""
    if deck_window < 1:
        raise ValueError("deck_window must be >= 1")
    z1 = np.asarray(z1, dtype=np.complex128)
    z2 = np.asarray(z2, dtype=np.complex128)
    _check_disc(z1)
    _check_disc(z2)
    w1, w2 = np.log(z1), np.log(z2)
    shifts = 2j * np.pi * np.arange(-deck_window, deck_window + 1)
    d = halfplane_distance(w1[..., None], w2[..., None] + shifts, curvature)
    d = np.min(d, axis=-1)
    return d if np.ndim(d) else float(d)


def radial_term(z1, z2):
    """|log(log|z1| / log|z2|)|."""
    a = np.log(np.abs(np.asarray(z1, dtype=np.complex128)))
    b = np.log(np.abs(np.asarray(z2, dtype=np.complex128)))
    out = np.abs(np.log(a / b))
    return out if out.ndim else float(out)


def g_term(z1, z2):
    """2 pi max(-1/log|z1|, -1/log|z2|)."""
    a = -1.0 / np.log(np.abs(np.asarray(z1, dtype=np.complex128)))
    b = -1.0 / np.log(np.abs(np.asarray(z2, dtype=np.complex128)))
    out = 2.0 * np.pi * np.maximum(a, b)
    return out if out.ndim else float(out)


def distance_bounds(z1, z2):
    """(lower, upper, g): radial term -+ g."""
    z1 = np.asarray(z1, dtype=np.complex128)
    z2 = np.asarray(z2, dtype=np.complex128)
    _check_disc(z1)
    _check_disc(z2)
    r = radial_term(z1, z2)
    g = g_term(z1, z2)
    return r - g, r + g, g


def separation_bound(beta: float) -> float:
    """log((1-beta)/beta), positive for 0 < beta < 1/2."""
    if not 0 < beta < 0.5:
        raise DomainError("beta must lie in (0, 1/2)")
    return math.log((1 - beta) / beta)


def separation_pairs(beta: float, moduli, seed: int = 0) -> tuple[np.ndarray, np.ndarray]:
    """Pairs (z1, z2) with |z2| = |z1|^((1-beta)/beta) and random arguments."""
    r = np.asarray(moduli, dtype=float)
    rng = np.random.default_rng(seed)
    a1 = rng.uniform(-np.pi, np.pi, r.shape)
    a2 = rng.uniform(-np.pi, np.pi, r.shape)
    z1 = r * np.exp(1j * a1)
    z2 = r ** ((1 - beta) / beta) * np.exp(1j * a2)
    return z1, z2
