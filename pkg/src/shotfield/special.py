"""Small scalar special functions shared across modules."""

from __future__ import annotations

import math

import numpy as np

PSI_SERIES_CUTOFF = 0.1
# Taylor coefficients of (e^-u - 1 + u) / u^2, i.e. (-1)^k / (k + 2)!
_PSI_COEF = tuple((-1) ** k / math.factorial(k + 2) for k in range(11))


def psi(u):
    """``exp(-u) - 1 + u`` for ``u >= 0``, stable near zero.

    Below ``0.1`` an eleven-term Taylor series is used; the direct formula
    loses about ``2e-16 / u`` relative accuracy to cancellation.
    """
    u = np.asarray(u, dtype=float)
    small = u < PSI_SERIES_CUTOFF
    us = np.where(small, u, 0.0)
    series = np.zeros_like(us)
    for c in reversed(_PSI_COEF):
        series = series * us + c
    series *= us * us
    direct = np.expm1(-np.where(small, 1.0, u)) + np.where(small, 1.0, u)
    return np.where(small, series, direct)[()]


def stable_constant(alpha: float) -> float:
    """``Gamma(2 - alpha) / (alpha - 1)`` = ``int_0^inf (1 - e^-v) v^-alpha dv``."""
    if not 1.0 < alpha < 2.0:
        raise ValueError("alpha must lie in (1, 2)")
    return math.gamma(2.0 - alpha) / (alpha - 1.0)


def psi_scalar(u: float) -> float:
    """Scalar :func:`psi` for use inside quadrature callbacks."""
    if u < PSI_SERIES_CUTOFF:
        acc = 0.0
        for c in reversed(_PSI_COEF):
            acc = acc * u + c
        return acc * u * u
    return math.expm1(-u) + u
