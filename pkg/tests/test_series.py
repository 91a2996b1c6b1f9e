from __future__ import annotations

from fractions import Fraction

import mpmath
import pytest

from rblab.series import regression_constant, tail_series


@pytest.mark.parametrize("k, c", [(2, Fraction(3, 4)), (3, Fraction(2, 3)), (5, Fraction(3, 5))])
def test_regression_constant(k, c):
    assert regression_constant(k) == c


def test_regression_constant_matches_binomial_expansion():
    # (1 - x/k)^(-k) = 1 + x + c x^2 + ...; second coefficient by mpmath Taylor
    for k in (2, 3, 4):
        coeffs = mpmath.taylor(lambda x: (1 - x / k) ** (-k), 0, 2)
        assert abs(coeffs[2] - float(regression_constant(k))) < 1e-12


def test_frozen_abel_coefficients():
    s2 = tail_series(2, 4)
    assert s2.a[:3] == (Fraction(5, 16), Fraction(21, 128), Fraction(35, 256))
    assert s2.b[0] == (Fraction(1, 2), Fraction(3, 4))
    s3 = tail_series(3, 4)
    assert s3.a[:2] == (Fraction(7, 27), Fraction(10, 81))
    assert s3.b[0] == (Fraction(1, 2), Fraction(2, 3))


@pytest.mark.parametrize("k", [2, 3])
def test_series_solves_one_dimensional_abel_equation(k):
    """Direct substitution at high precision: phi(u') - phi(u) - 1 = O(u^(order+1))."""
    order = 8
    s = tail_series(k, order)

    def phi(u):
        c = mpmath.mpf(s.c.numerator) / s.c.denominator
        tail = sum(mpmath.mpf(a.numerator) / a.denominator * u ** (i + 1) for i, a in enumerate(s.a))
        return 1 / u + c * mpmath.log(u) + tail

    with mpmath.workdps(60):
        for u in (mpmath.mpf("1e-2"), mpmath.mpf("1e-3")):
            u1 = u * (1 - u / k) ** k
            resid = abs(phi(u1) - phi(u) - 1)
            assert resid < 50 * u ** (order + 1)


@pytest.mark.parametrize("k", [2, 3])
def test_twist_series_solves_its_equation(k):
    order = 8
    s = tail_series(k, order)

    def frac(q):
        return mpmath.mpf(q.numerator) / q.denominator

    def phi(u):
        return 1 / u + frac(s.c) * mpmath.log(u) + sum(frac(a) * u ** (i + 1) for i, a in enumerate(s.a))

    def theta(u):
        L = -mpmath.log(u)
        return sum(frac(b) * u ** (i + 1) * L ** p for i, row in enumerate(s.b) for p, b in enumerate(row))

    with mpmath.workdps(60):
        u = mpmath.mpf("1e-3")
        u1 = u * (1 - u / k) ** k
        resid = abs(theta(u) - theta(u1) - k * mpmath.log(1 - u / k) - 1 / phi(u))
        # truncation leaves x^(order+1) L^p terms
        assert resid < 100 * u ** order


def test_rejects_bad_arguments():
    with pytest.raises(ValueError):
        tail_series(1)
