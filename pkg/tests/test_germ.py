from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from rblab import _kernels
from rblab import germ as gm
from rblab.errors import ConfigInvalid

small = st.complex_numbers(max_magnitude=0.9, allow_nan=False, allow_infinity=False)


def direct_polynomial(spec, p):
    """F written out coordinate by coordinate with plain Python complex arithmetic."""
    u = 1
    for z in p:
        u *= z
    out = [complex(spec.lam[j]) * p[j] * (1 - u / spec.k) for j in range(spec.k)]
    for t in spec.perturbation:
        mono = t.coefficient
        for z, e in zip(p, t.exponents):
            mono *= z ** e
        out[t.j] += mono
    return np.array(out)


def test_multiplier_product_is_one():
    for k in (2, 3, 4):
        spec = gm.default_spec(k)
        assert abs(np.prod(spec.lam) - 1) < 1e-14
        assert all(abs(abs(lam) - 1) < 1e-15 for lam in spec.lam)
        assert abs(spec.multiplier(0) - 1) < 1e-14


@given(st.lists(small, min_size=3, max_size=3))
def test_eval_matches_direct_polynomial(p):
    spec = gm.default_perturbed(3)
    got = gm.eval(spec, np.array(p))
    want = direct_polynomial(spec, p)
    assert np.allclose(got, want, rtol=1e-12, atol=1e-15)


@given(st.lists(small, min_size=2, max_size=2))
def test_compiled_step_matches_numpy(p):
    spec = gm.default_perturbed(2)
    z = np.array(p, dtype=np.complex128)
    out = np.empty_like(z)
    _kernels.step(z, out, spec.lam, *spec.kernel_terms)
    assert np.allclose(out, gm.eval(spec, z), rtol=1e-13, atol=1e-16)


def test_batch_eval_is_rowwise(pert2):
    rng = np.random.default_rng(1)
    P = 0.5 * (rng.standard_normal((20, 2)) + 1j * rng.standard_normal((20, 2)))
    rows = np.array([gm.eval(pert2, p) for p in P])
    assert np.array_equal(gm.eval(pert2, P), rows)


def test_model_preserves_axes(model2):
    p = np.array([0.3 + 0.1j, 0.0])
    assert gm.eval(model2, p)[1] == 0
    assert gm.default_perturbed(3).axis_invariant()


def test_format_parse_round_trip():
    for spec in (gm.default_spec(2), gm.default_perturbed(2), gm.default_perturbed(3)):
        text = gm.format_germ(spec)
        back = gm.parse_germ_text(text)
        assert back.k == spec.k and back.l == spec.l
        assert back.perturbation == spec.perturbation
        assert np.allclose(back.lam, spec.lam, atol=1e-15)
        assert back.digest() == spec.digest()


def test_parse_rest_and_terms():
    spec = gm.parse_germ_text("""
        dimension = 2
        alphas = golden rest
        l = 15
        term = 1, 0.5+0.25i, 15 0
    """)
    assert abs(np.prod(spec.lam) - 1) < 1e-14
    (t,) = spec.perturbation
    assert t.j == 0 and t.coefficient == 0.5 + 0.25j and t.exponents == (15, 0)


@pytest.mark.parametrize("text", [
    "dimension = 2\nalphas = golden\n",                        # wrong count
    "dimension = 2\nalphas = rest rest\n",                     # two complements
    "dimension = 2\nterm = 1, 1.0, 3 0\n",                     # degree below l
    "dimension = 2\nterm = 3, 1.0, 15 0\n",                    # coordinate out of range
    "dimension = 2\nterm = 1, abc, 15 0\n",                    # bad coefficient
    "dimension = 2\nterm = 1, 1.0\n",                          # missing field
    "dimension = 2\nl = 8\nterm = 1, 1.0, 8 0\n",              # beta (l+1) < 4
    "dimension = 2\njunk line\n",
])
def test_invalid_germs_rejected(text):
    with pytest.raises(ConfigInvalid):
        gm.parse_germ_text(text)


def test_spec_validation():
    base = gm.default_spec(2)
    with pytest.raises(ValueError):
        gm.GermSpec(k=1, lambdas=base.lambdas[:1])
    with pytest.raises(ValueError):
        gm.GermSpec(k=2, lambdas=base.lambdas, perturbation=(gm.PerturbationTerm(0, 1, (-1, 16)),))


def test_load_germ(tmp_path):
    path = tmp_path / "g.txt"
    path.write_text(gm.format_germ(gm.default_perturbed(2)))
    assert gm.load_germ(path).digest() == gm.default_perturbed(2).digest()
