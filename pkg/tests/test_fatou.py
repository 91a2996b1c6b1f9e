from __future__ import annotations

import math

import numpy as np
import pytest

from rblab import fatou as ft
from rblab import germ as gm
from rblab.errors import DomainError
from rblab.regions import BasinParams, SectorParams, in_B, sample_B

# R large enough that u -> u (1 - u/k)^k is univalent on the sector
BP = BasinParams(0.25, SectorParams(4.0, math.pi / 4))


@pytest.fixture(scope="module", params=[2, 3], ids=["k2", "k3"])
def setup(request):
    spec = gm.default_spec(request.param)
    P = sample_B(BP, 6, seed=1, k=spec.k)
    return spec, P, ft.fatou_batch(spec, P)


def test_converged(setup):
    _, _, b = setup
    assert b.converged.all()
    assert np.all(b.psi.real > 0)


def test_abel_equation(setup):
    spec, P, b = setup
    img = ft.fatou_batch(spec, gm.eval(spec, P))
    assert np.max(np.abs(img.psi - b.psi - 1)) < 1e-8


def test_twisted_equation(setup):
    spec, P, b = setup
    img = ft.fatou_batch(spec, gm.eval(spec, P))
    k = spec.k
    for j in range(2, k + 1):
        rhs = spec.multiplier(j - 1) * np.exp(-(k - j + 1) / k / b.psi) * b.sigma[:, j - 2]
        assert np.max(np.abs(img.sigma[:, j - 2] - rhs)) < 1e-8


def test_plain_route_closes_on_accelerated(setup):
    # the plain approximants carry an O(log n / n) tail error, so the gap to the
    # accelerated value must shrink about tenfold per decade of depth
    spec, P, b = setup
    gaps = []
    for n in (2_000, 20_000):
        plain = ft.fatou_batch(spec, P, accelerate=False, depth=np.full(len(P), n))
        gaps.append(max(np.max(np.abs(plain.psi - b.psi)), np.max(np.abs(plain.sigma - b.sigma))))
    assert gaps[1] < gaps[0] / 5
    assert gaps[1] < 1e-3


def test_single_point_api_matches_batch(setup):
    spec, P, b = setup
    est = ft.psi(spec, None, P[0])
    assert est.converged and abs(est.value - b.psi[0]) < 1e-12
    s = ft.sigma(spec, P[0])
    assert abs(s.value - b.sigma[0, -1]) < 1e-12
    assert np.allclose(ft.Q(spec, P[0]), b.images[0], rtol=0, atol=1e-12)


def test_psi_m_is_plain_approximant(model2):
    p = np.array([0.2 + 0.1j, 0.3 - 0.05j])
    seq = ft.psi_sequence(model2, 0.75, p, 5)
    u = np.prod(p)
    assert seq[0] == pytest.approx(1 / u + 0.75 * np.log(u))
    assert ft.psi_m(model2, 0.75, p, 5) == seq[5]
    with pytest.raises(ValueError):
        ft.psi_m(model2, 0.75, p, -1)


def test_sigma_domain(model2):
    p = np.array([0.2, 0.3 + 0j])
    with pytest.raises(DomainError):
        ft.sigma_n(model2, p, -1.0 + 0j, 10)
    with pytest.raises(DomainError):
        ft.sigma_j(model2, p, 0j, 2)
    with pytest.raises(ValueError):
        ft.sigma_n(model2, p, 1.0 + 0j, 10, j=1)


def test_sigma_n_converges_to_sigma(model2):
    p = sample_B(BP, 1, seed=2, k=2)[0]
    ps = ft.psi(model2, None, p).value
    s = ft.sigma(model2, p, psi_value=ps).value
    assert abs(ft.sigma_n(model2, p, ps, 20_000) - s) < 1e-3


def test_increment_rates_decay(model2):
    P = sample_B(BP, 4, seed=3, k=2)
    rates = dict(ft.psi_increment_rates(model2, 0.75, P, [100, 1000]))
    assert rates[1000] < rates[100] / 3


def test_jacobian_near_one(model2):
    (row,) = ft.jacobian_probe(model2, [1e-3])
    assert row["abs_det_minus_1"] < 0.05


def test_invert_round_trip(setup):
    spec, P, b = setup
    res = ft.invert_Q(spec, b.images, BP)
    assert res.success.all()
    assert np.allclose(res.points, P, rtol=1e-7, atol=0)
    assert np.all(in_B(res.points, BP))


def test_injectivity_probe(model2):
    rep = ft.injectivity_probe(model2, BP, 200, seed=0)
    assert rep.collisions_Q == 0 and rep.collisions_psi_w == 0
    assert rep.n_pairs == 200
