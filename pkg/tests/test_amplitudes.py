import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate, optimize

from shotfield.amplitudes import INFINITE, Deterministic, Exponential, Pareto, law_from_dict

LAWS = [Deterministic(2.0), Exponential(1.0), Exponential(2.5), Pareto(1.5, 1.0), Pareto(1.2, 0.5)]


def test_pareto_inverse_cdf_matches_root_finding():
    law = Pareto(1.5, 1.0)
    root = optimize.brentq(lambda t: law.tail(t) - 0.5, 1.0, 100.0, xtol=1e-14)
    assert law.from_uniform(0.5) == pytest.approx(root, rel=1e-12)
    assert law.from_uniform(0.5) == pytest.approx(0.5 ** (-2 / 3), rel=1e-14)


def test_exponential_inverse_at_e_inverse():
    assert Exponential(1.0).from_uniform(math.exp(-1.0)) == pytest.approx(1.0, rel=1e-15)


def test_deterministic_samples_are_constant():
    rng = np.random.default_rng(0)
    assert np.all(Deterministic(2.0).sample(rng, 10) == 2.0)
    assert Deterministic(2.0).sample(rng) == 2.0


def test_pareto_tail_closed_form_and_ratio():
    law = Pareto(1.5, 1.0)
    assert law.tail(4.0) == pytest.approx(0.125)
    dens = lambda t: 1.5 * t**-2.5
    assert integrate.quad(dens, 4.0, np.inf)[0] == pytest.approx(0.125, rel=1e-10)
    for t in (1.0, 3.3, 50.0):
        assert law.tail(2 * t) / law.tail(t) == pytest.approx(2**-1.5)


@pytest.mark.parametrize("law", LAWS)
def test_tail_at_zero_and_monotone(law):
    assert law.tail(0.0) == 1.0
    t = np.linspace(0, 20, 400)
    assert np.all(np.diff(law.tail(t)) <= 0)


def test_moments():
    assert Deterministic(2.0).m2 == 4.0
    assert Exponential(2.0).mean == 0.5 and Exponential(2.0).m2 == 0.5
    p = Pareto(1.5, 2.0)
    assert p.mean == pytest.approx(6.0)
    assert p.m2 is INFINITE and not p.has_finite_m2
    with pytest.raises(TypeError):
        float(p.m2)


@pytest.mark.parametrize("alpha", [1.0, 2.0, 0.5, 2.5])
def test_pareto_index_is_restricted(alpha):
    with pytest.raises(ValueError):
        Pareto(alpha, 1.0)


def test_invalid_parameters():
    for bad in (lambda: Deterministic(0.0), lambda: Exponential(-1.0), lambda: Pareto(1.5, 0.0)):
        with pytest.raises(ValueError):
            bad()


def test_laplace_values():
    assert Exponential(2.0).laplace(2.0) == pytest.approx(0.5)
    quad = integrate.quad(lambda t: 2.0 * math.exp(-2.0 * t) * math.exp(-2.0 * t), 0, np.inf)[0]
    assert quad == pytest.approx(0.5, rel=1e-10)
    for law in LAWS:
        assert law.laplace(0.0) == 1.0


def test_pareto_laplace_against_direct_quadrature():
    law = Pareto(1.5, 1.0)
    for s in (0.01, 0.3, 2.0):
        direct = integrate.quad(lambda t: 1.5 * t**-2.5 * math.exp(-s * t), 1.0, np.inf,
                                epsabs=1e-13, limit=200)[0]
        assert law.laplace(s) == pytest.approx(direct, abs=1e-10)


@pytest.mark.parametrize("law", LAWS)
def test_laplace_complement_matches_laplace(law):
    s = np.array([0.0, 1e-6, 1e-3, 0.1, 1.0, 7.0])
    comp = law.laplace_complement(s)
    direct = np.array([1.0 - law.laplace(x) for x in s])
    assert np.allclose(comp, direct, atol=1e-9, rtol=0)


def test_pareto_laplace_complement_small_argument_expansion():
    # 1 - L(s) = p s - C x^alpha + O(s^2), C = Gamma(2 - alpha)/(alpha - 1)
    law = Pareto(1.5, 1.0)
    s = 1e-8
    expected = law.mean * s - math.gamma(0.5) / 0.5 * s**1.5
    assert law.laplace_complement(s) == pytest.approx(expected, rel=1e-8)


@settings(max_examples=60, deadline=None)
@given(st.sampled_from(LAWS), st.floats(0.0, 50.0), st.floats(0.0, 50.0))
def test_laplace_bounds_and_monotonicity(law, s1, s2):
    lo, hi = sorted((s1, s2))
    a, b = law.laplace(lo), law.laplace(hi)
    assert 0 < b <= a <= 1
    assert 1 - a <= law.mean * lo + 1e-10
    assert a >= math.exp(-lo * law.mean) - 1e-10  # Jensen


def test_scaling_g():
    assert Exponential(3.0).scaling_g(100.0) == pytest.approx(10.0)
    p = Pareto(1.5, 1.0)
    assert p.scaling_g(8.0) == pytest.approx(4.0)
    root = optimize.brentq(lambda g: p.tail(g) - 1 / 8, 1.0, 100.0, xtol=1e-14)
    assert p.scaling_g(8.0) == pytest.approx(root, rel=1e-10)
    for lam in (2.0, 37.0, 1e4):
        for law in (Pareto(1.5, 1.0), Pareto(1.3, 0.7)):
            assert 1.0 / law.tail(law.scaling_g(lam)) == pytest.approx(lam, rel=1e-12)
            assert law.scaling_g(5 * lam) == pytest.approx(5 ** (1 / law.alpha) * law.scaling_g(lam))
    with pytest.raises(ValueError):
        p.scaling_g(0.0)


@pytest.mark.slow
@pytest.mark.parametrize("law", [Exponential(1.0), Pareto(1.5, 1.0)])
def test_monte_carlo_mean(law):
    rng = np.random.default_rng(12345)
    x = law.sample(rng, 10**6)
    se = x.std() / math.sqrt(len(x))
    assert abs(x.mean() - law.mean) < 5 * se


def test_psi_mean_matches_sample_average():
    rng = np.random.default_rng(3)
    for law in (Exponential(1.0), Pareto(1.5, 1.0), Deterministic(1.3)):
        x = law.sample(rng, 200000)
        psi = np.expm1(-0.7 * x) + 0.7 * x
        assert law.psi_mean(0.7) == pytest.approx(psi.mean(), abs=5 * psi.std() / math.sqrt(len(x)) + 1e-12)


def test_law_records_roundtrip():
    for law in LAWS:
        assert law_from_dict(law.to_dict()) == law
    assert law_from_dict({"kind": "pareto", "alpha": 1.5, "xm": 1.0}) == Pareto(1.5, 1.0)
    with pytest.raises(ValueError):
        law_from_dict({"kind": "gamma"})
