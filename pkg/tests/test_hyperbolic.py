from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from rblab import hyperbolic as hy
from rblab.errors import DomainError

radius = st.floats(1e-6, 0.999)
angle = st.floats(-math.pi, math.pi)
disc = st.builds(lambda r, a: r * complex(math.cos(a), math.sin(a)), radius, angle)
left = st.builds(complex, st.floats(-50, -1e-3), st.floats(-50, 50))


def arccosh_distance(w1, w2):
    """Textbook half-plane formula, rotated to Re w < 0."""
    return math.acosh(1 + abs(w1 - w2) ** 2 / (2 * w1.real * w2.real))


@given(left, left)
def test_halfplane_matches_arccosh(w1, w2):
    d = hy.halfplane_distance(w1, w2)
    assume(d > 1e-6)            # the textbook formula cancels for close points
    assert d == pytest.approx(arccosh_distance(w1, w2), rel=1e-9)


@given(disc, disc, disc)
def test_metric_axioms(a, b, c):
    dab = hy.punctured_disc_distance(a, b)
    assert dab >= 0
    assert dab == pytest.approx(hy.punctured_disc_distance(b, a), rel=1e-12, abs=1e-15)
    assert hy.punctured_disc_distance(a, a) == 0
    assert dab <= hy.punctured_disc_distance(a, c) + hy.punctured_disc_distance(c, b) + 1e-9


@given(st.floats(1e-4, 0.99), st.floats(1e-4, 0.99))
def test_radial_pairs_are_exact(r1, r2):
    d = hy.punctured_disc_distance(r1, r2)
    want = abs(math.log(math.log(r1) / math.log(r2)))
    assert d == pytest.approx(want, rel=1e-10, abs=1e-13)
    assert hy.radial_term(r1, r2) == pytest.approx(want, rel=1e-12, abs=1e-15)


@given(disc, disc)
def test_rotation_invariance(a, b):
    rot = complex(math.cos(0.7), math.sin(0.7))
    assert hy.punctured_disc_distance(a * rot, b * rot) == pytest.approx(
        hy.punctured_disc_distance(a, b), rel=1e-9, abs=1e-12)


@given(disc, disc)
def test_two_sided_bound(a, b):
    lo, hi, g = hy.distance_bounds(a, b)
    d = hy.punctured_disc_distance(a, b)
    assert lo - 1e-9 <= d <= hi + 1e-9
    assert g == pytest.approx(2 * math.pi * max(-1 / math.log(abs(a)), -1 / math.log(abs(b))))


def test_curvature_convention_halves():
    z1, z2 = 0.3 + 0.2j, 0.01 - 0.05j
    assert hy.punctured_disc_distance(z1, z2, curvature=-4) == pytest.approx(
        hy.punctured_disc_distance(z1, z2) / 2, rel=1e-14)
    with pytest.raises(ValueError):
        hy.halfplane_distance(-1 + 0j, -2 + 0j, curvature=-2)


@given(disc, disc)
def test_nearest_translates_suffice(a, b):
    # principal logarithms differ by less than 2 pi in imaginary part
    assert hy.punctured_disc_distance(a, b, deck_window=1) == hy.punctured_disc_distance(a, b)


def test_vectorized():
    z1 = np.array([0.1, 0.2 + 0.1j])
    z2 = np.array([0.5j, 0.3])
    d = hy.punctured_disc_distance(z1, z2)
    assert d.shape == (2,)
    assert d[1] == hy.punctured_disc_distance(z1[1], z2[1])


@pytest.mark.parametrize("z", [0j, 1 + 0j, 1.5j])
def test_domain_errors(z):
    with pytest.raises(DomainError):
        hy.punctured_disc_distance(z, 0.5 + 0j)
    with pytest.raises(DomainError):
        hy.distance_bounds(0.5 + 0j, z)


def test_halfplane_domain():
    with pytest.raises(DomainError):
        hy.halfplane_distance(0j, -1 + 0j)
    with pytest.raises(ValueError):
        hy.punctured_disc_distance(0.5, 0.3, deck_window=0)


@given(st.floats(0.01, 0.49))
def test_separation_bound(beta):
    assert hy.separation_bound(beta) == pytest.approx(math.log((1 - beta) / beta))
    assert hy.separation_bound(beta) > 0


def test_separation_pairs_grow_apart():
    beta = 0.3
    moduli = np.array([1e-2, 1e-4, 1e-8])
    z1, z2 = hy.separation_pairs(beta, moduli, seed=0)
    assert np.allclose(np.abs(z2), moduli ** ((1 - beta) / beta))
    d = hy.punctured_disc_distance(z1, z2)
    lo = hy.separation_bound(beta) - hy.g_term(z1, z2)
    assert np.all(d >= lo - 1e-12)
    assert d[-1] == pytest.approx(hy.separation_bound(beta), abs=0.5)


@pytest.mark.parametrize("beta", [0.0, 0.5, 0.7])
def test_separation_bound_domain(beta):
    with pytest.raises(DomainError):
        hy.separation_bound(beta)
