"""Statistics comparing replicate samples with limit laws."""

from __future__ import annotations

import math

import numpy as np
from scipy import stats

from ..limits import GaussianLimit, StableLimit
from ..shotnoise import FddQuery


def ecf(samples, t) -> np.ndarray:
    """Empirical characteristic function ``mean(exp(i t x))`` on a grid."""
    x = np.asarray(samples, dtype=float).ravel()
    if x.size == 0:
        raise ValueError("empty sample")
    t = np.asarray(t, dtype=float)
    return np.exp(1j * np.multiply.outer(t, x)).mean(axis=-1)


def cf_distance(a, b) -> float:
    """Sup-distance between two CFs tabulated on the same grid."""
    return float(np.max(np.abs(np.asarray(a) - np.asarray(b))))


def ks_gaussian(samples, variance: float) -> tuple[float, float]:
    """One-sample KS statistic and asymptotic p-value against ``N(0, variance)``."""
    x = np.asarray(samples, dtype=float).ravel()
    if x.size == 0:
        raise ValueError("empty sample")
    if not variance > 0:
        raise ValueError("variance must be positive")
    res = stats.kstest(x, "norm", args=(0.0, math.sqrt(variance)), method="asymp")
    return float(res.statistic), float(res.pvalue)


def fit_stable_sigma(samples, alpha: float, n_points: int = 9) -> float:
    """Scale estimate from the ECF modulus.

    ``-log|cf(t)| = sigma^alpha |t|^alpha`` for a stable law, so a
    least-squares line through the origin on ``t`` in ``[0.2, 1] / (IQR / 2)``
    gives ``sigma^alpha``.
    """
    x = np.asarray(samples, dtype=float).ravel()
    q75, q25 = np.percentile(x, [75, 25])
    half_iqr = 0.5 * (q75 - q25)
    if not half_iqr > 0:
        raise ValueError("degenerate sample")
    t = np.linspace(0.2, 1.0, n_points) / half_iqr
    y = -np.log(np.abs(ecf(x, t)))
    u = t**alpha
    return float((np.dot(u, y) / np.dot(u, u)) ** (1.0 / alpha))


def fdd_joint_check(samples, q: FddQuery, theory, cf_grid=None) -> dict:
    """Reduce an ``N x m`` sample to ``sum_j s_j X_j`` and test it against the 1d limit."""
    X = np.asarray(samples, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    if X.shape[1] != q.m:
        raise ValueError("sample columns must match the query positions")
    y = X @ q.weights
    if isinstance(theory, GaussianLimit):
        var = theory.variance(q.weights)
        ks, p = ks_gaussian(y, var)
        return {"kind": "gaussian", "variance": var, "ks_statistic": ks, "ks_pvalue": p,
                "sample_variance": float(np.var(y, ddof=1))}
    if isinstance(theory, StableLimit):
        grid = np.asarray(cf_grid if cf_grid is not None else
                          (-2, -1, -0.5, -0.25, 0.25, 0.5, 1, 2), dtype=float)
        dist = cf_distance(ecf(y, grid), theory.cf(grid))
        return {"kind": "stable", "sigma": theory.sigma, "cf_distance": dist,
                "sigma_fit": fit_stable_sigma(y, theory.alpha)}
    raise TypeError("theory must be a GaussianLimit or StableLimit")
