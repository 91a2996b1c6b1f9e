from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from rblab import _kernels
from rblab import regions as rg
from rblab.errors import RejectionOverflow

coord = st.complex_numbers(max_magnitude=1.2, allow_nan=False, allow_infinity=False)


@given(st.lists(coord, min_size=3, max_size=3),
       st.floats(0.05, 0.32), st.floats(0.5, 8.0), st.floats(0.1, 1.4))
def test_compiled_membership_agrees(p, beta, R, theta):
    bp = rg.BasinParams(beta, rg.SectorParams(R, theta))
    z = np.array(p, dtype=np.complex128)
    assert _kernels.in_b(z, beta, R, bp.sector.slope) == rg.in_B(z, bp)


def test_compiled_membership_agrees_on_samples(bp_model):
    P = rg.sample_B(bp_model, 300, seed=5, k=3)
    jitter = np.random.default_rng(0).uniform(0.5, 2.0, P.shape)
    for z in np.concatenate([P, P * jitter]):
        assert _kernels.in_b(z, bp_model.beta, bp_model.R, bp_model.sector.slope) == rg.in_B(z, bp_model)


def test_boundaries_are_strict():
    s = rg.SectorParams(1.0, math.pi / 4)
    assert not rg.in_sector_S(0j, s)
    assert not rg.in_sector_S(1.0 + 0j, s)          # on the circle |zeta - 1/2| = 1/2
    assert rg.in_sector_S(0.5 + 0j, s)
    assert not rg.in_sector_S(0.25 + 0.25j, s)     # on the angle boundary
    assert rg.in_H(2.0 + 0j, s) and not rg.in_H(1.0 + 0j, s)
    assert not rg.in_W(np.array([0.5, 0.0]), 0.3)


def test_sector_is_image_of_half_plane():
    s = rg.SectorParams(2.0, 0.6)
    rng = np.random.default_rng(3)
    U = rng.uniform(0, 20, 500) + 1j * rng.uniform(-20, 20, 500)
    assert np.array_equal(rg.in_H(U, s), rg.in_sector_S(1 / U, s))


def test_samples_lie_in_B_and_are_deterministic(bp_model):
    a = rg.sample_B(bp_model, 50, seed=11, k=2)
    b = rg.sample_B(bp_model, 80, seed=11, k=2)
    assert np.all(rg.in_B(a, bp_model))
    assert np.array_equal(a, b[:50])                    # point i depends only on (seed, i)
    assert not np.array_equal(a, rg.sample_B(bp_model, 50, seed=12, k=2))


def test_sampler_rejects_bad_arguments(bp_model):
    with pytest.raises(ValueError):
        rg.sample_B(bp_model, 0, seed=0)
    with pytest.raises(ValueError):
        rg.sample_B(rg.BasinParams(0.4, bp_model.sector), 5, seed=0, k=3)   # beta >= 1/k
    with pytest.raises(ValueError):
        rg.point_rng(-1, 0)


def test_rejection_overflow():
    # |u| ~ 1e-300 squares to zero, so B is numerically empty
    bp = rg.BasinParams(0.3, rg.SectorParams(1e300, 0.7))
    with pytest.raises(RejectionOverflow):
        rg.sample_B(bp, 3, seed=0, max_attempts=5)


@given(st.lists(st.complex_numbers(min_magnitude=1e-3, max_magnitude=10, allow_nan=False,
                                   allow_infinity=False), min_size=2, max_size=4))
def test_phi_round_trip(p):
    z = np.array(p)
    y = rg.phi_coordinates(z)
    assert np.isclose(y[0], np.prod(z), rtol=1e-12)
    assert np.allclose(rg.phi_inverse(y), z, rtol=1e-11)


def test_param_validation():
    with pytest.raises(ValueError):
        rg.SectorParams(0.0, 0.5)
    with pytest.raises(ValueError):
        rg.SectorParams(1.0, math.pi / 2)
    with pytest.raises(ValueError):
        rg.BasinParams(0.5, rg.SectorParams(1.0, 0.5))


def test_calibration_certificate(model2):
    sector = rg.calibrate_R(model2, samples=200, horizon=2000, seed=0)
    cert = sector.certificate
    assert cert["samples"] == 200 and cert["horizon"] == 2000
    assert cert["schedule"][-1] == {"R": sector.R, "violations": 0}
    bp = rg.BasinParams(0.3, sector)
    assert np.all(rg.first_exit(model2, bp, rg.sample_B(bp, 200, 0, 2), 2000) < 0)
