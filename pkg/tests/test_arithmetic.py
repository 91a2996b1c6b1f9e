from __future__ import annotations

import math
from fractions import Fraction

import mpmath
import pytest
from hypothesis import given
from hypothesis import strategies as st

from rblab import arithmetic as ar
from rblab.errors import PrecisionExhausted, RootOfUnity


def direct_omega(alpha, m, dps=50):
    """min_{2<=h<=m} |exp(2 pi i h alpha) - exp(2 pi i alpha)| by complex exponentials."""
    with mpmath.workdps(dps):
        lam = mpmath.expjpi(2 * alpha)
        return min(abs(lam ** h - lam) for h in range(2, m + 1))


def test_golden_omega_frozen():
    # |lambda^2 - lambda| = 2 sin(pi alpha) with alpha = (sqrt 5 - 1)/2
    w = ar.omega(ar.RotationNumber.golden(), 2)
    assert abs(float(w) - 1.86406484762646) < 1e-13


@pytest.mark.parametrize("m", [2, 5, 16, 64, 200])
def test_omega_matches_direct_exponentials(m):
    g = ar.RotationNumber.golden()
    with mpmath.workdps(50):
        alpha = (mpmath.sqrt(5) - 1) / 2
    assert abs(ar.omega(g, m) - direct_omega(alpha, m)) < 1e-30


def test_parse_forms():
    assert ar.RotationNumber.parse("1/3").fraction == Fraction(1, 3)
    assert ar.RotationNumber.parse("0.25").exact
    assert ar.RotationNumber.parse("0.25").fraction == Fraction(1, 4)
    assert ar.RotationNumber.parse("cf:0,2,3").fraction == Fraction(3, 7)
    g = ar.RotationNumber.parse("golden")
    cf = ar.RotationNumber.parse("cf:0,(1)")
    assert not g.exact and not cf.exact
    assert abs(g.value() - cf.value()) < mpmath.mpf(10) ** -38
    assert str(g) == "golden"
    with pytest.raises(ValueError):
        ar.RotationNumber.parse("not-a-number")
    with pytest.raises(ValueError):
        ar.RotationNumber.parse("cf:0,0,(1)")


def test_silver_mean_from_periodic_cf():
    s = ar.RotationNumber.parse("cf:0,(2)")
    with mpmath.workdps(45):
        assert abs(s.value(45) - (mpmath.sqrt(2) - 1)) < mpmath.mpf(10) ** -38


def test_conjugate_is_negation_mod_one():
    g = ar.RotationNumber.golden()
    assert (g.num + g.conjugate().num) % g.den == 0


@pytest.mark.parametrize("q", [1, 2, 3, 7, 64])
def test_rationals_are_roots_of_unity(q):
    with pytest.raises(RootOfUnity):
        ar.brjuno_partial_sums(ar.RotationNumber.from_fraction(Fraction(1, q)), 7)


@given(st.integers(1, 200), st.integers(0, 199), st.integers(0, 8))
def test_rational_rejection_iff_period_reached(q, p, K):
    """omega(m) vanishes exactly when some 2 <= h <= m has h = 1 mod q."""
    p %= q
    if math.gcd(p, q) != 1:
        return
    rot = ar.RotationNumber.from_fraction(Fraction(p, q))
    if 2 ** (K + 1) >= q + 1:
        with pytest.raises(RootOfUnity):
            ar.brjuno_partial_sums(rot, K)
    else:
        rep = ar.brjuno_partial_sums(rot, K)
        assert all(w > 0 for w in rep.omega_values)


def test_golden_partial_sums_shape():
    rep = ar.brjuno_partial_sums(ar.RotationNumber.golden(), 12)
    assert rep.m_values[-1] == 2 ** 13
    sums = rep.partial_sums
    assert all(b >= a for a, b in zip(sums, sums[1:]))
    # the tail decays geometrically but is still 5e-3 at K = 12
    assert 4e-3 < rep.stagnation < 7e-3
    assert rep.verdict == "inconclusive"


def test_golden_stagnates_by_sixteen():
    rep = ar.brjuno_partial_sums(ar.RotationNumber.golden(), 16)
    assert rep.verdict == "brjuno-plausible"
    assert rep.stagnation < 1e-3


def test_liouville_like_is_inconclusive():
    rep = ar.brjuno_partial_sums(ar.liouville_like(3), 12)
    assert rep.verdict == "inconclusive"


def test_precision_exhausted_for_huge_depth():
    g = ar.RotationNumber.golden(dps=12)
    with pytest.raises(PrecisionExhausted):
        ar.brjuno_partial_sums(g, 20, dps=12)


def test_one_resonance_conjugate_pair():
    g = ar.RotationNumber.golden()
    rep = ar.check_one_resonant([g, g.conjugate()], 8)
    assert rep.ok and not rep.violations
    assert rep.index_gap < 1e-30


def test_one_resonance_violated_by_rational_pair():
    q = ar.RotationNumber.from_fraction
    rep = ar.check_one_resonant([q(Fraction(1, 4)), q(Fraction(1, 2))], 6)
    assert not rep.ok


def test_product_not_one_is_reported():
    g = ar.RotationNumber.golden()
    rep = ar.check_one_resonant([g, g], 4)
    assert not rep.ok
    assert rep.violations[0].multi_index == (1, 1)


def test_random_thirty_digit_triple():
    from rblab.checks import _random_tuple
    rep = ar.check_one_resonant(_random_tuple(19), 6)
    assert rep.ok, rep.to_dict()


def test_admissible_reports_one_per_coordinate():
    g = ar.RotationNumber.golden()
    reps = ar.admissible_partial_sums([g, g.conjugate()], 6)
    assert len(reps) == 2
    assert all(r.omega_values[0] > 0 for r in reps)
