"""Quadrature helpers: nested adaptive integration and Gauss-Legendre panels."""

from __future__ import annotations

import math
from typing import Callable, Sequence

import numpy as np
from scipy import integrate


class QuadratureError(RuntimeError):
    """Adaptive quadrature failed to reach its tolerance."""


def _quad(f, a, b, epsabs, epsrel, points=None, limit=400):
    pts = None
    if points is not None:
        pts = sorted({float(p) for p in points if a < p < b})
        pts = pts or None
    with np.errstate(all="ignore"):
        val, err, *info = integrate.quad(f, a, b, epsabs=epsabs, epsrel=epsrel,
                                         points=pts, limit=limit, full_output=1)
    if len(info) > 1 and err > 10 * max(epsabs, epsrel * abs(val)):
        raise QuadratureError(f"quad on [{a}, {b}] stalled: value {val}, error {err}")
    return val


def integrate_box(
    f: Callable[..., float],
    lo: Sequence[float],
    hi: Sequence[float],
    epsabs: float = 1e-8,
    epsrel: float = 1e-10,
    breaks: Callable[[int, tuple], Sequence[float]] | None = None,
) -> float:
    """Adaptive tensor quadrature of ``f(x1[, x2])`` over a box in 1 or 2 dimensions.

    ``breaks(axis, outer)`` may return known kinks/discontinuities along
    ``axis`` given the already-fixed outer coordinates.
    """
    d = len(lo)
    if d == 1:
        pts = breaks(0, ()) if breaks else None
        return _quad(f, lo[0], hi[0], epsabs, epsrel, pts)
    if d == 2:
        width = hi[0] - lo[0]

        def inner(x):
            pts = breaks(1, (x,)) if breaks else None
            return _quad(lambda y: f(x, y), lo[1], hi[1], epsabs / width, epsrel, pts)

        pts = breaks(0, ()) if breaks else None
        return _quad(inner, lo[0], hi[0], epsabs, epsrel, pts)
    raise ValueError("only d in {1, 2} is supported")


def gauss_legendre_panels(
    lo: float,
    hi: float,
    panel_width: float,
    order: int,
    breaks: Sequence[float] = (),
) -> tuple[np.ndarray, np.ndarray]:
    """Composite Gauss-Legendre rule on ``[lo, hi]``.

    The interval is cut at ``breaks`` and each piece split into equal panels
    no wider than ``panel_width``, each carrying ``order`` nodes.
    """
    if hi <= lo:
        raise ValueError("empty interval")
    x0, w0 = np.polynomial.legendre.leggauss(order)
    edges = sorted({lo, hi, *[b for b in breaks if lo < b < hi]})
    nodes, weights = [], []
    for a, b in zip(edges[:-1], edges[1:]):
        k = max(1, math.ceil((b - a) / panel_width - 1e-12))
        cuts = np.linspace(a, b, k + 1)
        half = 0.5 * np.diff(cuts)
        mid = 0.5 * (cuts[:-1] + cuts[1:])
        nodes.append((mid[:, None] + half[:, None] * x0[None, :]).ravel())
        weights.append((half[:, None] * w0[None, :]).ravel())
    return np.concatenate(nodes), np.concatenate(weights)
