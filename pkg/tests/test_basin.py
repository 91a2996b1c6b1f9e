from __future__ import annotations

import cmath
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from rblab import basin as bs
from rblab import germ as gm
from rblab.errors import DomainError, NotInBasin
from rblab.regions import BasinParams, SectorParams, in_B, sample_B

BP = BasinParams(0.3, SectorParams(2.0, math.pi / 4))


@pytest.fixture(scope="module")
def grid(model2):
    return bs.raster_slice(model2, bs.SliceSpec.real(2), BP, resolution=40, n_max=20_000)


def test_verdicts(model2):
    p = sample_B(BP, 1, seed=0)[0]
    assert bs.classify(model2, p, BP) == bs.BasinVerdict("in_basin", 0)
    axis = bs.classify(model2, np.array([0.1 + 0j, 0j]), BP)
    assert axis.status == "not_in_basin" and axis.reason == "axis"
    esc = bs.classify(model2, np.array([5.0 + 0j, 3.0 + 0j]), BP)
    assert esc.status == "not_in_basin" and esc.reason == "escaped"
    assert esc.decided and esc.hit_step is None


def test_horizon_exhausted(model2):
    # a point in the basin that needs many steps to reach B
    p = np.array([0.6 + 0j, 0.01 + 0j])
    full = bs.classify(model2, p, BP)
    assert full.status == "in_basin" and full.step > 1
    short = bs.classify(model2, p, BP, n_max=full.step - 1)
    assert short.status == "undetermined" and short.reason == "horizon_exhausted"
    assert not short.decided


def test_hitting_step_is_forward_consistent(model2, grid):
    P = np.stack(np.meshgrid(np.linspace(-0.8, 0.8, 25), np.linspace(-0.8, 0.8, 25)), -1)
    P = P.reshape(-1, 2).astype(np.complex128)
    codes, steps = bs.classify_batch(model2, P, BP, 20_000)
    inside = codes == 0
    codes1, steps1 = bs.classify_batch(model2, gm.eval(model2, P[inside]), BP, 20_000)
    assert np.all(codes1 == 0)
    assert np.array_equal(steps1, np.maximum(steps[inside] - 1, 0))


def test_oracles_agree_on_slice(model2, grid):
    ratio = bs.raster_slice(model2, bs.SliceSpec.real(2), BP, resolution=40, n_max=20_000,
                            oracle="ratio")
    decided = (grid.status != 1) & (ratio.status != 1)
    assert decided.mean() > 0.9
    assert np.mean(grid.status[decided] == ratio.status[decided]) > 0.98


def test_axis_cells_never_in_basin(grid):
    assert grid.axis.any()
    assert np.all(grid.status[grid.axis] == 0)
    assert grid.counts()["axis"] == int(grid.axis.sum())


def test_pgm_layout(grid):
    data = grid.pgm_bytes()
    header = b"P5\n40 40\n255\n"
    assert data.startswith(header)
    img = np.frombuffer(data[len(header):], dtype=np.uint8).reshape(40, 40)
    assert set(np.unique(img)) <= set(bs.PGM_LEVELS.values())
    assert np.array_equal(img == 255, grid.status == 2)
    assert grid.t[0] == grid.t.max() and grid.s[0] == grid.s.min()


def test_write_pgm(grid, tmp_path):
    path = tmp_path / "slice.pgm"
    grid.write_pgm(path)
    assert path.read_bytes() == grid.pgm_bytes()


def test_slice_parse():
    sl = bs.SliceSpec.parse("o=0,0;e1=1,0;e2=0,1j", 2)
    assert sl.e2 == (0j, 1j)
    assert bs.SliceSpec.parse("real", 3) == bs.SliceSpec.real(3)
    assert bs.SliceSpec.parse("conj", 2) == bs.SliceSpec.conjugate()
    with pytest.raises(ValueError):
        bs.SliceSpec.parse("conj", 3)
    with pytest.raises(ValueError):
        bs.SliceSpec.parse("o=0,0;e1=1,0", 2)


def test_grid_has_exact_axis():
    s, t, pts = bs.SliceSpec.real(2).grid(10)
    assert 0.0 in s and 0.0 in t
    assert pts.shape == (10, 10, 2)


def test_global_coordinates_equivariance(model3):
    bp = BasinParams(0.25, SectorParams(2.0, math.pi / 4))
    P = np.array([[0.5, 0.3, 0.1], [0.4 + 0.1j, -0.5, -0.2], [0.6, 0.2, 0.4],
                  [0.7, 0.5, -0.3j]], dtype=complex)
    gc = bs.global_coordinates(model3, P, bp, n_max=20_000)
    img = bs.global_coordinates(model3, gm.eval(model3, P), bp, n_max=20_000)
    assert np.all(gc.converged) and np.all(gc.h_gap < 1e-7)
    assert np.max(np.abs(img.g1 - gc.g1 - 1)) < 1e-8
    ok = gc.in_domain
    assert ok.sum() == 3            # the last row has Re g_1 < 0
    for a, j in enumerate((2, 3)):
        lam = model3.multiplier(j - 1)
        rhs = lam * np.exp(-(3 - j + 1) / 3 / gc.g1[ok]) * gc.g[ok, a]
        assert np.max(np.abs(img.g[ok, a] - rhs)) < 1e-8


def test_global_coordinates_extend_local(model2):
    from rblab.fatou import fatou_batch
    P = sample_B(BP, 5, seed=3)
    gc = bs.global_coordinates(model2, P, BP)
    assert np.all(gc.hit_step == 0)
    assert np.allclose(gc.images, fatou_batch(model2, P).images, rtol=0, atol=1e-12)


def test_not_in_basin(model2):
    with pytest.raises(NotInBasin):
        bs.g1(model2, np.array([0.1 + 0j, 0j]), BP)
    with pytest.raises(ValueError):
        bs.g_j(model2, sample_B(BP, 1, 0)[0], BP, 3)


def test_transition_pole():
    lam = cmath.exp(2j * math.pi * 0.3)
    with pytest.raises(DomainError):
        bs.transition(-2 + 0j, 2, lam)
    with pytest.raises(DomainError):
        bs.T_map(0j, 1 + 0j, lam)
    with pytest.raises(DomainError):
        bs.t_iteration(-3 + 0j, 1 + 0j, lam, 5)


@given(st.floats(1.5, 50), st.floats(-0.9, 0.9), st.integers(0, 20))
def test_two_step_cocycle(x, slope, n):
    lam = cmath.exp(2j * math.pi * 0.618)
    prod, direct = bs.two_step_multiplier(complex(x, slope * x), n, lam)
    assert abs(prod - direct) < 1e-13


def test_t_iteration_closed_form():
    lam = cmath.exp(2j * math.pi * 0.2)
    zeta, xi = bs.t_iteration(3 + 1j, 0.5 + 0j, lam, 50)
    z, x = 3 + 1j, 0.5 + 0j
    for _ in range(50):
        z, x = bs.T_map(z, x, lam)
    assert zeta[-1] == z and abs(xi[-1] - x) < 1e-14


def test_sample_overlap():
    sec = SectorParams(2.0, math.pi / 4)
    Z = bs.sample_overlap(100, 0, sec, n=3)
    assert Z.shape == (100,)
    w = Z + 3
    assert np.all(w.real > sec.R) and np.all(np.abs(w.imag) < sec.slope * w.real)
