"""Limit laws of the centred shot-noise field and the exact Poisson pre-limit.

Gaussian case: ``(I~(z_j))_j`` tends to a centred Gaussian vector with
covariance ``m2 * int ell(z_j - x) ell(z_k - x) dx``.

Stable case: the linear combination ``sum_j s_j I~(z_j)`` tends to
``S_alpha(sigma, 1, 0)`` (Samorodnitsky-Taqqu parametrisation) where
``sigma^alpha = -C_alpha cos(pi alpha / 2) int xi^alpha dx`` and
``C_alpha = Gamma(2 - alpha) / (alpha - 1)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .amplitudes import AmplitudeLaw
from .quadrature import integrate_box
from .shotnoise import FddQuery, ResponseFn, xi_eval
from .special import psi, stable_constant

__all__ = [
    "psi", "overlap", "gaussian_cov", "GaussianLimit", "gaussian_limit",
    "gaussian_fdd_laplace", "xi_power_integral", "stable_fdd_laplace", "stable_sigma",
    "StableLimit", "stable_limit", "stable_cf", "poisson_prelimit_laplace",
    "sample_stable", "stable_constant",
]

LIMIT_EPSABS = 1e-8
PRELIMIT_EPSREL = 1e-6


def _breaks_for(centers: np.ndarray, ell: ResponseFn):
    """Breakpoint callback for :func:`integrate_box` around response centres.

    Smooth profiles get their peaks; ball indicators get the exact edges of
    each ball along the current axis.
    """
    r = ell.radius

    def breaks(axis, outer):
        if axis == 0:
            pts = list(centers[:, 0])
            if ell.discontinuous:
                pts += list(centers[:, 0] - r) + list(centers[:, 0] + r)
            return pts
        x = outer[0]
        pts = list(centers[:, 1])
        if ell.discontinuous:
            for c in centers:
                h2 = r * r - (x - c[0]) ** 2
                if h2 > 0:
                    h = math.sqrt(h2)
                    pts += [c[1] - h, c[1] + h]
        return pts

    return breaks


def _integrate_over(f, lo, hi, centers, ell, epsabs=LIMIT_EPSABS, epsrel=1e-10):
    return integrate_box(f, list(lo), list(hi), epsabs=epsabs, epsrel=epsrel,
                         breaks=_breaks_for(np.atleast_2d(centers), ell))


def overlap(ell: ResponseFn, z1, z2) -> float:
    """``int ell(z1 - x) ell(z2 - x) dx`` by adaptive quadrature.

    The domain is the ball of radius ``2 R_tol`` around the midpoint (taken
    through its bounding box); outside it one factor is below the response
    tail tolerance.
    """
    d = ell.dim
    z1 = np.reshape(np.asarray(z1, dtype=float), d)
    z2 = np.reshape(np.asarray(z2, dtype=float), d)
    if np.linalg.norm(z1 - z2) > 2 * ell.radius:
        return 0.0
    mid = 0.5 * (z1 + z2)
    R = 2.0 * ell.radius
    centers = np.stack([z1, z2])

    def f(*x):
        x = np.array(x)
        return ell.profile(float(np.sum((z1 - x) ** 2))) * ell.profile(float(np.sum((z2 - x) ** 2)))

    return _integrate_over(f, mid - R, mid + R, centers, ell)


def gaussian_cov(ell: ResponseFn, z1, z2, m2) -> float:
    if not isinstance(m2, (int, float)):
        raise ValueError("the Gaussian limit needs a finite second moment")
    return float(m2) * overlap(ell, z1, z2)


@dataclass(frozen=True, eq=False)
class GaussianLimit:
    """Centred Gaussian limit at the query positions; ``cov = m2 * overlap``."""

    query: FddQuery
    m2: float
    overlap_matrix: np.ndarray

    @property
    def cov(self) -> np.ndarray:
        return self.m2 * self.overlap_matrix

    def variance(self, weights=None) -> float:
        s = self.query.weights if weights is None else np.asarray(weights, dtype=float)
        return float(s @ self.cov @ s)

    def cf(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        return np.exp(-0.5 * self.variance() * t * t).astype(complex)

    def cdf(self, x) -> np.ndarray:
        from scipy.stats import norm
        return norm.cdf(x, scale=math.sqrt(self.variance()))

    def to_dict(self) -> dict:
        return {"kind": "gaussian", "covariance": self.cov.tolist(),
                "variance": self.variance(), "laplace": gaussian_fdd_laplace(self)}


def gaussian_limit(query: FddQuery, ell: ResponseFn, law: AmplitudeLaw) -> GaussianLimit:
    if not law.has_finite_m2:
        raise ValueError("the Gaussian limit needs a finite second moment")
    m = query.m
    L = np.empty((m, m))
    for j in range(m):
        for k in range(j, m):
            L[j, k] = L[k, j] = overlap(ell, query.positions[j], query.positions[k])
    return GaussianLimit(query, float(law.m2), L)


def gaussian_fdd_laplace(glim: GaussianLimit) -> float:
    """``E exp(-sum_j s_j N(z_j)) = exp((m2 / 2) s^T L s)``; exceeds 1."""
    return math.exp(0.5 * glim.variance())


def xi_power_integral(q: FddQuery, ell: ResponseFn, alpha: float) -> float:
    """``int xi(x)^alpha dx`` over the hull of the balls ``B(z_j, R_tol)``."""
    if not np.any(q.weights > 0):
        return 0.0
    lo, hi = q.hull(ell.radius)
    f = lambda *x: float(xi_eval(q, ell, np.array(x))) ** alpha
    return _integrate_over(f, lo, hi, q.positions, ell)


def stable_fdd_laplace(q: FddQuery, ell: ResponseFn, alpha: float) -> float:
    return math.exp(stable_constant(alpha) * xi_power_integral(q, ell, alpha))


def stable_sigma(q: FddQuery, ell: ResponseFn, alpha: float) -> float:
    # cos(pi alpha / 2) < 0 on (1, 2), so the product is nonnegative
    val = -stable_constant(alpha) * xi_power_integral(q, ell, alpha) * math.cos(math.pi * alpha / 2)
    return max(val, 0.0) ** (1.0 / alpha)


def _stable_cf_sigma(sigma: float, alpha: float, t) -> np.ndarray:
    t = np.asarray(t, dtype=float)
    a = np.abs(t) ** alpha * sigma**alpha
    return np.exp(-a * (1.0 - 1j * np.sign(t) * math.tan(math.pi * alpha / 2)))


@dataclass(frozen=True, eq=False)
class StableLimit:
    query: FddQuery
    alpha: float
    log_laplace: float
    sigma: float

    def cf(self, t) -> np.ndarray:
        return _stable_cf_sigma(self.sigma, self.alpha, t)

    def to_dict(self) -> dict:
        return {"kind": "stable", "alpha": self.alpha, "sigma": self.sigma,
                "log_laplace": self.log_laplace, "laplace": math.exp(self.log_laplace)}


def stable_limit(query: FddQuery, ell: ResponseFn, alpha: float) -> StableLimit:
    integral = xi_power_integral(query, ell, alpha)
    sigma = (-stable_constant(alpha) * integral * math.cos(math.pi * alpha / 2)) ** (1.0 / alpha)
    return StableLimit(query, alpha, stable_constant(alpha) * integral, sigma)


def stable_cf(q: FddQuery, ell: ResponseFn, alpha: float, t) -> np.ndarray:
    """CF of ``S_alpha(sigma, 1, 0)``: ``exp(-sigma^a |t|^a (1 - i sign(t) tan(pi a / 2)))``."""
    return _stable_cf_sigma(stable_sigma(q, ell, alpha), alpha, t)[()]


def poisson_prelimit_laplace(lam: float, law: AmplitudeLaw, q: FddQuery, ell: ResponseFn,
                             epsrel: float = PRELIMIT_EPSREL) -> float:
    """Exact ``E exp(-sum_j s_j I~(z_j))`` for a Poisson process at intensity ``lam``.

    Equal to ``exp(lam * int E[psi(P xi(x) / g)] dx)``: the outer integral runs
    over the hull of the response supports, the inner one (over the amplitude
    law) is done by the law itself.
    """
    if not lam > 0:
        raise ValueError("intensity must be positive")
    if not np.any(q.weights > 0):
        return 1.0
    g = law.scaling_g(lam)
    lo, hi = q.hull(ell.radius)

    def f(*x):
        c = float(xi_eval(q, ell, np.array(x))) / g
        return law.psi_mean(c, epsrel=epsrel * 1e-2) if c > 0 else 0.0

    expo = integrate_box(f, list(lo), list(hi), epsabs=0.0, epsrel=epsrel,
                         breaks=_breaks_for(q.positions, ell))
    return math.exp(lam * expo)


def sample_stable(alpha: float, sigma: float, rng: np.random.Generator, size=None):
    """Chambers-Mallows-Stuck draw(s) from ``S_alpha(sigma, 1, 0)``, ``1 < alpha < 2``."""
    if not 1.0 < alpha < 2.0:
        raise ValueError("alpha must lie in (1, 2)")
    if not sigma > 0:
        raise ValueError("scale must be positive")
    tan = math.tan(math.pi * alpha / 2)
    B = math.atan(tan) / alpha
    S = (1.0 + tan * tan) ** (1.0 / (2.0 * alpha))
    V = math.pi * (rng.random(size) - 0.5)
    W = rng.standard_exponential(size)
    X = S * np.sin(alpha * (V + B)) / np.cos(V) ** (1.0 / alpha) \
        * (np.cos(V - alpha * (V + B)) / W) ** ((1.0 - alpha) / alpha)
    return (sigma * X)[()]
