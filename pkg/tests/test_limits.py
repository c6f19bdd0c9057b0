import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate, stats

from shotfield.amplitudes import Deterministic, Exponential, Pareto
from shotfield.limits import (gaussian_cov, gaussian_fdd_laplace, gaussian_limit, overlap,
                              poisson_prelimit_laplace, psi, sample_stable, stable_cf,
                              stable_constant, stable_fdd_laplace, stable_limit, stable_sigma,
                              xi_power_integral)
from shotfield.shotnoise import BallIndicator, ExpDecay, FddQuery, GaussBump


def test_psi_values():
    assert psi(0.0) == 0.0
    assert psi(1.0) == pytest.approx(float(mpmath.e ** -1), rel=1e-15)
    u = np.array([1e-9, 5e-5, 9.9e-5, 1e-4, 2e-4])
    with mpmath.workdps(50):
        exact = [float(mpmath.exp(-mpmath.mpf(x)) - 1 + mpmath.mpf(x)) for x in u]
    assert np.allclose(psi(u), exact, rtol=1e-13, atol=0)


@settings(max_examples=200)
@given(st.floats(0, 1e6))
def test_psi_bounds(u):
    v = psi(u)
    assert 0.0 <= v <= u * u / 2 * (1 + 1e-15)


def test_overlap_closed_forms():
    g = GaussBump(1, 1.7, 0.6)
    for delta in (0.0, 0.4, 1.5):
        exact = 1.7**2 * 0.6 * math.sqrt(math.pi / 2) * math.exp(-delta**2 / (2 * 0.36))
        assert overlap(g, 0.3, 0.3 + delta) == pytest.approx(exact, abs=1e-8)
    b = BallIndicator(1, 0.5)
    for delta in (0.0, 0.3, 0.99):
        assert overlap(b, 1.0, 1.0 + delta) == pytest.approx(1.0 - delta, abs=1e-8)
    assert overlap(b, 0.0, 1.2) == 0.0


@settings(max_examples=15, deadline=None)
@given(st.floats(-1, 1), st.floats(-1, 1), st.sampled_from(
    [GaussBump(1, 2.0, 0.3), BallIndicator(1, 0.4), ExpDecay(1, 1.0, 4.0)]))
def test_overlap_bound(z1, z2, ell):
    assert overlap(ell, z1, z2) <= ell.sup * ell.integral * (1 + 1e-9)


def test_gaussian_cov_requires_finite_moment():
    ell = GaussBump(1, 1.0, 1.0)
    assert gaussian_cov(ell, 0.0, 0.0, 2.0) == pytest.approx(2 * math.sqrt(math.pi / 2))
    with pytest.raises(ValueError):
        gaussian_cov(ell, 0.0, 0.0, Pareto(1.5, 1.0).m2)
    with pytest.raises(ValueError):
        gaussian_limit(FddQuery([0.0]), ell, Pareto(1.5, 1.0))


def test_gaussian_laplace_examples():
    ell = GaussBump(1, 1.0, 1.0)
    glim = gaussian_limit(FddQuery([0.0]), ell, Exponential(1.0))
    assert gaussian_fdd_laplace(glim) == pytest.approx(math.exp(math.sqrt(math.pi / 2)), rel=1e-10)
    assert gaussian_fdd_laplace(gaussian_limit(FddQuery([0.0], [0.0]), ell, Exponential(1.0))) == 1.0
    glim2 = gaussian_limit(FddQuery([0.3, 0.3], [1.0, 1.0]), ell, Exponential(1.0))
    assert glim2.variance() == pytest.approx(4 * glim.variance())


def test_gaussian_cov_2d():
    ell = GaussBump(2, 1.0, 0.5)
    exact = 0.25 * math.pi / 2 * math.exp(-0.2**2 / (2 * 0.25))
    assert overlap(ell, [0.0, 0.0], [0.2, 0.0]) == pytest.approx(exact, abs=1e-8)


def test_stable_constant():
    assert stable_constant(1.5) == pytest.approx(2 * math.sqrt(math.pi), rel=1e-14)
    v = integrate.quad(lambda x: -math.expm1(-x) * x**-1.5, 0, np.inf)[0]
    assert stable_constant(1.5) == pytest.approx(v, rel=1e-8)


def test_xi_power_closed_form_and_bound():
    ell = GaussBump(1, 1.0, 1.0)
    q = FddQuery([0.0], [2.0])
    exact = 2**1.5 * math.sqrt(math.pi / 1.5)
    assert xi_power_integral(q, ell, 1.5) == pytest.approx(exact, abs=1e-8)
    q2 = FddQuery([0.0, 0.7, 3.0], [0.5, 1.0, 0.2])
    for a in (1.1, 1.5, 1.9):
        assert xi_power_integral(q2, ell, a) <= ell.sup ** (a - 1) * ell.integral * 1.7**a


def test_stable_zero_weights():
    ell = GaussBump(1, 1.0, 1.0)
    q = FddQuery([0.0], [0.0])
    assert stable_fdd_laplace(q, ell, 1.5) == 1.0
    assert stable_sigma(q, ell, 1.5) == 0.0


def test_stable_continuity_towards_two():
    # the stable constant blows up like 1 / (2 - alpha); after removing that
    # factor the scale integral approaches the squared response integral
    ell = GaussBump(1, 1.0, 1.0)
    q = FddQuery([0.0, 0.5], [1.0, 0.5])
    target = integrate.quad(
        lambda x: float(sum(w * ell(z - x) for z, w in zip([0.0, 0.5], [1.0, 0.5]))) ** 2, -6, 7)[0]
    gaps = [abs((2 - a) * stable_constant(a) * xi_power_integral(q, ell, a) - target)
            for a in (1.9, 1.99, 1.999)]
    assert gaps[0] > gaps[1] > gaps[2]
    assert gaps[2] < 0.01 * target


def test_stable_cf_properties():
    ell = BallIndicator(1, 0.4)
    q = FddQuery([1.0])
    t = np.array([-2.0, -0.5, 0.0, 0.5, 2.0])
    cf = stable_cf(q, ell, 1.5, t)
    sig = stable_sigma(q, ell, 1.5)
    assert cf[2] == 1.0
    assert np.allclose(np.abs(cf), np.exp(-(sig * np.abs(t)) ** 1.5))
    assert np.allclose(cf[::-1], np.conj(cf))


def test_stable_cf_continues_the_laplace_transform():
    # E exp(-s S) = exp(sigma^a s^a / cos(pi a / 2)); check against the closed-form Laplace value
    ell = GaussBump(1, 1.0, 1.0)
    q = FddQuery([0.0])
    a = 1.5
    lim = stable_limit(q, ell, a)
    assert math.exp(-lim.sigma**a / math.cos(math.pi * a / 2)) == pytest.approx(
        stable_fdd_laplace(q, ell, a), rel=1e-10)


def test_prelimit_zero_weights():
    assert poisson_prelimit_laplace(10.0, Exponential(1.0), FddQuery([0.0], [0.0]), GaussBump(1, 1, 1)) == 1.0


def test_prelimit_deterministic_closed_form():
    # Deterministic(1), ball indicator: xi is constant on the ball so the integral is explicit
    ell = BallIndicator(1, 0.5)
    q = FddQuery([0.0])
    lam = 20.0
    g = math.sqrt(lam)
    exact = math.exp(lam * 1.0 * (math.exp(-1 / g) - 1 + 1 / g))
    assert poisson_prelimit_laplace(lam, Deterministic(1.0), q, ell) == pytest.approx(exact, rel=1e-6)


def test_prelimit_converges_to_gaussian():
    ell = GaussBump(1, 1.0, 1.0)
    q = FddQuery([0.0])
    target = gaussian_fdd_laplace(gaussian_limit(q, ell, Exponential(1.0)))
    gaps = [abs(poisson_prelimit_laplace(lam, Exponential(1.0), q, ell) / target - 1) for lam in (1e2, 1e3, 1e4)]
    assert gaps[0] > gaps[1] > gaps[2]


def test_prelimit_converges_to_stable():
    ell = GaussBump(1, 1.0, 1.0)
    q = FddQuery([0.0])
    target = stable_fdd_laplace(q, ell, 1.5)
    gaps = [abs(poisson_prelimit_laplace(lam, Pareto(1.5, 1.0), q, ell) / target - 1) for lam in (1e2, 1e3, 1e4)]
    assert gaps[0] > gaps[1] > gaps[2]


def test_prelimit_matches_monte_carlo_small():
    from shotfield.pointproc import Window, sample_poisson
    from shotfield.shotnoise import centralize_scale, field_eval
    ell = GaussBump(1, 1.0, 0.3)
    q = FddQuery([0.0, 0.4], [1.0, 0.5])
    law = Exponential(1.0)
    lam = 8.0
    win = Window(1, 1.0, "padded", ell.radius)
    rng = np.random.default_rng(2)
    y = []
    for _ in range(20000):
        p = sample_poisson(lam, win, rng, region=q.hull(ell.radius))
        vals = field_eval(p, law.sample(rng, len(p)), ell, q.positions)
        y.append(centralize_scale(vals, lam, law, ell) @ q.weights)
    e = np.exp(-np.array(y))
    se = e.std(ddof=1) / math.sqrt(len(e))
    assert abs(e.mean() - poisson_prelimit_laplace(lam, law, q, ell)) < 3 * se


def test_stable_sampler_validation():
    rng = np.random.default_rng(0)
    with pytest.raises(ValueError):
        sample_stable(2.0, 1.0, rng)
    with pytest.raises(ValueError):
        sample_stable(1.5, 0.0, rng)
    assert np.isscalar(sample_stable(1.5, 1.0, rng))


@pytest.mark.slow
def test_stable_sampler_mean_cf_and_scaling():
    rng = np.random.default_rng(77)
    alpha, sigma = 1.5, 0.8
    x = sample_stable(alpha, sigma, rng, 10**6)
    assert abs(x.mean()) < 5 * x.std() / math.sqrt(len(x))
    ecf = np.exp(1j * x).mean()
    cf = np.exp(-sigma**alpha * (1 - 1j * math.tan(math.pi * alpha / 2)))
    se = math.sqrt(1 / len(x))
    assert abs(ecf - cf) < 3 * se * math.sqrt(2)
    unit = sample_stable(alpha, 1.0, np.random.default_rng(78), 20000)
    _, p = stats.ks_2samp(x[:20000], sigma * unit)
    assert p > 0.01
    # right-skewed: the lower tail is light
    assert np.quantile(x, 0.999) > -np.quantile(x, 0.001)


def test_gaussian_covariance_matrix_is_psd_on_random_queries():
    rng = np.random.default_rng(6)
    for ell in (GaussBump(1, 1.0, 0.5), BallIndicator(1, 0.3)):
        for _ in range(5):
            q = FddQuery(rng.uniform(0, 2, 4))
            cov = gaussian_limit(q, ell, Exponential(1.0)).cov
            assert np.allclose(cov, cov.T)
            assert np.linalg.eigvalsh(cov).min() >= -1e-10
