import math

import numpy as np
import pytest
from scipy import integrate, stats

from shotfield.pointproc import (DppModel, PointPattern, Window, dpp_build, empirical_pair_correlation,
                                 kernel_eval, kernel_l2_integral, pair_correlation, sample_dpp,
                                 sample_poisson)


def test_window_validation():
    with pytest.raises(ValueError):
        Window(3, 1.0)
    with pytest.raises(ValueError):
        Window(1, 0.0)
    with pytest.raises(ValueError):
        Window(1, 1.0, "mirror")
    w = Window(2, 2.0, "padded", 0.5)
    assert np.all(w.lower == -0.5) and np.all(w.upper == 2.5)


def test_pattern_rejects_outside_points_and_roundtrips(tmp_path):
    w = Window(2, 1.0, "torus")
    with pytest.raises(ValueError):
        PointPattern([[0.5, 1.5]], 3.0, w)
    p = PointPattern(np.random.default_rng(0).random((7, 2)), 3.0, w)
    p.to_csv(tmp_path / "p.csv")
    back = PointPattern.from_csv(tmp_path / "p.csv", 3.0, w)
    assert np.array_equal(back.points, p.points)
    assert (tmp_path / "p.csv").read_text().splitlines()[0] == "x,y"


def test_poisson_zero_intensity_is_empty():
    assert len(sample_poisson(0.0, Window(1, 1.0), np.random.default_rng(0))) == 0


@pytest.mark.slow
def test_poisson_counts():
    rng = np.random.default_rng(99)
    w = Window(2, 1.0, "torus")
    counts = np.array([len(sample_poisson(50.0, w, rng)) for _ in range(10000)])
    assert abs(counts.mean() - 50) < 5 * math.sqrt(50 / 10000)
    assert counts.var(ddof=1) == pytest.approx(50, rel=0.05)
    # chi-square goodness of fit against Poisson(50) on pooled bins
    edges = np.array([0, 38, 42, 45, 48, 50, 52, 55, 58, 62, 1000])
    obs = np.histogram(counts, bins=edges)[0]
    cdf = stats.poisson.cdf(edges[1:] - 1, 50) - stats.poisson.cdf(edges[:-1] - 1, 50)
    _, p = stats.chisquare(obs, cdf / cdf.sum() * len(counts))
    assert p > 0.01


def test_poisson_region_restricts_points():
    w = Window(1, 1.0, "padded", 0.5)
    p = sample_poisson(200.0, w, np.random.default_rng(1), region=(0.2, 0.4))
    assert np.all((p.points >= 0.2) & (p.points <= 0.4))
    with pytest.raises(ValueError):
        sample_poisson(1.0, w, np.random.default_rng(1), region=(3.0, 4.0))


def test_spectrum_examples():
    m0 = dpp_build(100.0, 0.0, Window(2, 1.0, "torus"))
    assert m0.peak == pytest.approx(1.0, abs=1e-12)
    m = dpp_build(100.0, 0.5, Window(1, 5.0, "torus"))
    assert m.peak == pytest.approx(0.1, rel=1e-12)
    for model in (m0, m, dpp_build(30.0, 0.5, Window(1, 10.0, "torus")),
                  dpp_build(20.0, 1.0, Window(2, 2.0, "torus"))):
        lam, vol = model.lam, model.window.volume
        assert np.all((model.beta >= 0) & (model.beta <= 1))
        assert model.expected_count == pytest.approx(lam * vol, rel=1e-8)
        edge = np.max(np.abs(model.freqs), axis=1) == model.M
        assert model.beta[edge].max() < 1e-12


def test_truncation_drops_little_mass():
    w = Window(1, 3.0, "torus")
    m = dpp_build(40.0, 0.3, w)
    c = math.pi * m.bandwidth / w.L
    k = np.arange(m.M + 1, m.M + 20000)
    dropped = 2 * m.peak * np.exp(-(c * k) ** 2).sum()
    assert dropped < 1e-9 * 40.0 * w.L


def test_dpp_build_requires_torus_and_valid_parameters():
    with pytest.raises(ValueError):
        dpp_build(10.0, 0.5, Window(1, 1.0, "padded"))
    with pytest.raises(ValueError):
        dpp_build(10.0, -0.1, Window(1, 1.0))
    with pytest.raises(ValueError):
        dpp_build(0.0, 0.5, Window(1, 1.0))


def test_spectrum_csv(tmp_path):
    m = dpp_build(5.0, 0.5, Window(1, 2.0))
    m.spectrum_to_csv(tmp_path / "s.csv")
    lines = (tmp_path / "s.csv").read_text().splitlines()
    assert lines[0] == "k1,beta" and len(lines) == len(m.beta) + 1


def test_empty_selection_gives_empty_pattern():
    w = Window(1, 1.0)
    model = DppModel(1.0, 0.0, w, 0.1, 0, np.zeros((1, 1), dtype=int), np.zeros(1))
    assert len(sample_dpp(model, np.random.default_rng(0))) == 0


def test_count_equals_selected_rank():
    model = dpp_build(15.0, 0.5, Window(1, 4.0))
    for seed in range(5):
        chosen = int(np.sum(np.random.default_rng(seed).random(len(model.beta)) < model.beta))
        assert len(sample_dpp(model, np.random.default_rng(seed))) == chosen


def test_dpp_count_moments():
    model = dpp_build(10.0, 0.5, Window(1, 5.0))
    rng = np.random.default_rng(17)
    n = np.array([len(sample_dpp(model, rng)) for _ in range(400)])
    se = n.std(ddof=1) / math.sqrt(len(n))
    assert abs(n.mean() - model.expected_count) < 3 * se
    assert n.var(ddof=1) == pytest.approx(model.count_variance, rel=4 * math.sqrt(2 / 399))


def _region_number_variance(model, a):
    # Var N([0, a]) = lam a - int_0^a int_0^a K(x, y)^2 dx dy
    s, lam = model.bandwidth, model.lam
    f = lambda r: 2 * (a - r) * lam**2 * math.exp(-2 * r * r / (s * s))
    return lam * a - integrate.quad(f, 0, a, points=[3 * s], limit=200)[0]


@pytest.mark.slow
def test_local_sampling_matches_restriction_statistics():
    model = dpp_build(25.0, 0.0, Window(1, 10.0))
    a = 0.6
    rng = np.random.default_rng(4)
    local = np.array([len(sample_dpp(model, rng, region=(4.0, 4.0 + a))) for _ in range(3000)])
    full = []
    for _ in range(150):
        pts = sample_dpp(model, rng).points[:, 0]
        full += [np.sum((pts >= b) & (pts < b + a)) for b in np.arange(0, 10 - a, 1.0)]
    full = np.array(full)
    var = _region_number_variance(model, a)
    for x in (local, full):
        se = x.std(ddof=1) / math.sqrt(len(x))
        assert abs(x.mean() - 25 * a) < 3.5 * se
        assert x.var(ddof=1) == pytest.approx(var, rel=4 * math.sqrt(2 / len(x)))
    assert var < 25 * a  # repulsion lowers the number variance below the Poisson value


def test_local_sampling_keeps_points_in_region_and_wraps():
    model = dpp_build(30.0, 0.5, Window(1, 10.0))
    p = sample_dpp(model, np.random.default_rng(3), region=(9.6, 10.4))
    x = p.points[:, 0]
    assert np.all((x >= 9.6) | (x <= 0.4 + 1e-12))


def test_kernel_examples():
    model = dpp_build(50.0, 0.5, Window(2, 3.0))
    s = model.bandwidth
    assert kernel_eval(model, [1.0, 1.0], [1.0, 1.0]) == pytest.approx(50.0)
    assert kernel_eval(model, [1.0, 1.0], [1.0 + s, 1.0]) == pytest.approx(50 * math.exp(-1))
    assert kernel_eval(model, [0.1, 0.2], [2.9, 2.95]) == kernel_eval(model, [2.9, 2.95], [0.1, 0.2])
    assert kernel_eval(model, [0.0, 0.0], [2.99, 0.0]) == pytest.approx(50 * math.exp(-1e-4 / s**2))


@pytest.mark.parametrize("eps,expected", [(0.0, 50.0), (1.0, 0.5)])
def test_kernel_l2_examples(eps, expected):
    model = dpp_build(100.0, eps, Window(2, 1.0))
    assert kernel_l2_integral(model) == pytest.approx(expected, rel=1e-12)
    s = model.bandwidth
    radial = 2 * math.pi * integrate.quad(lambda r: r * 1e4 * math.exp(-2 * r * r / s**2), 0, 10 * s,
                                          epsabs=0, epsrel=1e-12)[0]
    assert radial == pytest.approx(expected, rel=1e-9)
    assert kernel_l2_integral(model) <= model.lam


def test_pair_correlation_examples():
    model = dpp_build(20.0, 0.0, Window(1, 10.0))
    assert pair_correlation(model, 0.0) == 0.0
    assert pair_correlation(model, 100.0) == 1.0
    assert pair_correlation(model, model.bandwidth) == pytest.approx(1 - math.exp(-2))
    with pytest.raises(ValueError):
        pair_correlation(model, -1.0)


@pytest.mark.slow
def test_empirical_pair_correlation_matches_closed_form():
    model = dpp_build(20.0, 0.0, Window(1, 10.0))
    s = model.bandwidth
    edges = np.linspace(0, 3 * s, 7)
    rng = np.random.default_rng(21)
    reps = np.array([empirical_pair_correlation([sample_dpp(model, rng)], edges, 20.0)
                     for _ in range(200)])
    est, se = reps.mean(axis=0), reps.std(axis=0, ddof=1) / math.sqrt(len(reps))
    mid = 0.5 * (edges[1:] + edges[:-1])
    # bin-averaged theory
    theory = [integrate.quad(lambda r: pair_correlation(model, r), a, b)[0] / (b - a)
              for a, b in zip(edges[:-1], edges[1:])]
    assert np.all(np.abs(est - theory) < 4 * se + 1e-3)
    assert est[0] < 0.3 < est[-1]
    assert mid[0] < s
