"""Homogeneous Poisson and Gaussian-kernel determinantal point processes.

The DPP kernel is ``K(x, y) = lam * exp(-|x - y|^2 / s^2)`` with bandwidth
``s = pi**-0.5 * lam**(-(1 + eps) / d)``.  On the torus ``[0, L)^d`` it is
diagonal in the Fourier basis with eigenvalues
``beta_k = lam * (sqrt(pi) s)^d * exp(-pi^2 s^2 |k / L|^2)``, the largest of
which is ``lam**-eps``.  Sampling uses the spectral method: Bernoulli
selection of frequencies, then the sequential projection sampler in
:mod:`shotfield._kernels`.
"""

from __future__ import annotations

import csv
import functools
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy.special import erfc, erfcinv

from . import _kernels
from ._kernels import SamplerBreakdown

__all__ = [
    "Window", "PointPattern", "DppModel", "SamplerBreakdown", "sample_poisson",
    "dpp_build", "sample_dpp", "kernel_eval", "kernel_l2_integral", "pair_correlation",
    "dpp_bandwidth", "MASS_TOL", "EDGE_TOL", "LOCAL_MARGIN",
]

MASS_TOL = 1e-9      # dropped eigenvalue mass, relative to lam * L^d
EDGE_TOL = 1e-12     # largest eigenvalue allowed on the truncation boundary
LOCAL_MARGIN = 8.0   # sub-torus margin in bandwidths; images enter as exp(-64)
MAX_PROPOSALS = 10**7


@dataclass(frozen=True)
class Window:
    """Box ``[0, L]^d``.

    In ``padded`` mode points live on ``[-pad, L + pad]^d`` so a field read
    inside ``[0, L]^d`` sees every point within ``pad``; in ``torus`` mode the
    box is periodic.
    """

    d: int = 1
    L: float = 1.0
    boundary: str = "torus"
    pad: float = 0.0

    def __post_init__(self):
        if self.d not in (1, 2):
            raise ValueError("dimension must be 1 or 2")
        if not self.L > 0:
            raise ValueError("window side must be positive")
        if self.boundary not in ("torus", "padded"):
            raise ValueError("boundary must be 'torus' or 'padded'")
        if self.pad < 0:
            raise ValueError("padding must be nonnegative")

    @property
    def is_torus(self) -> bool:
        return self.boundary == "torus"

    @property
    def lower(self) -> np.ndarray:
        off = 0.0 if self.is_torus else -self.pad
        return np.full(self.d, off)

    @property
    def upper(self) -> np.ndarray:
        off = 0.0 if self.is_torus else self.pad
        return np.full(self.d, self.L + off)

    @property
    def volume(self) -> float:
        return self.L**self.d

    def contains(self, points) -> np.ndarray:
        pts = np.asarray(points, dtype=float).reshape(-1, self.d)
        return np.all((pts >= self.lower) & (pts <= self.upper), axis=1)

    def to_dict(self) -> dict:
        return {"d": self.d, "L": self.L, "boundary": self.boundary, "pad": self.pad}


@dataclass(frozen=True, eq=False)
class PointPattern:
    """A finite point configuration with the intensity that generated it."""

    points: np.ndarray
    lam: float
    window: Window

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float).reshape(-1, self.window.d)
        if len(pts) and not self.window.contains(pts).all():
            raise ValueError("pattern has points outside its window")
        object.__setattr__(self, "points", pts)

    def __len__(self) -> int:
        return len(self.points)

    def to_csv(self, path) -> None:
        names = ["x", "y"][: self.window.d]
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(names)
            w.writerows(self.points.tolist())

    @classmethod
    def from_csv(cls, path, lam: float, window: Window) -> "PointPattern":
        rows = np.loadtxt(Path(path), delimiter=",", skiprows=1, ndmin=2)
        return cls(rows.reshape(-1, window.d), lam, window)


def _clip_region(window: Window, region) -> tuple[np.ndarray, np.ndarray]:
    if region is None:
        return window.lower, window.upper
    lo, hi = (np.broadcast_to(np.asarray(b, dtype=float), (window.d,)) for b in region)
    lo, hi = np.maximum(lo, window.lower), np.minimum(hi, window.upper)
    if np.any(hi < lo):
        raise ValueError("sampling region does not meet the window")
    return lo, hi


def sample_poisson(lam: float, window: Window, rng: np.random.Generator,
                   region=None) -> PointPattern:
    """Homogeneous Poisson process on the window's sampling box.

    ``region=(lo, hi)`` restricts sampling to a sub-box, which is exact for a
    Poisson process: it is the process restricted to that box.
    """
    if lam < 0:
        raise ValueError("intensity must be nonnegative")
    lo, hi = _clip_region(window, region)
    n = rng.poisson(lam * float(np.prod(hi - lo))) if lam > 0 else 0
    pts = lo + (hi - lo) * rng.random((n, window.d))
    return PointPattern(pts, lam, window)


# ---------------------------------------------------------------------------
# Gaussian-kernel DPP


def dpp_bandwidth(lam: float, eps: float, d: int) -> float:
    return math.pi**-0.5 * lam ** (-(1.0 + eps) / d)


@dataclass(frozen=True, eq=False)
class DppModel:
    """Stationary Gaussian-kernel DPP on a torus with its truncated spectrum.

    ``freqs`` holds the integer frequency vectors with ``|k|_inf <= M`` and
    ``beta`` the matching eigenvalues.
    """

    lam: float
    eps: float
    window: Window
    bandwidth: float
    M: int
    freqs: np.ndarray = field(repr=False)
    beta: np.ndarray = field(repr=False)

    @property
    def peak(self) -> float:
        return float(self.beta.max()) if len(self.beta) else 0.0

    @property
    def expected_count(self) -> float:
        return float(self.beta.sum())

    @property
    def count_variance(self) -> float:
        return float(np.sum(self.beta * (1.0 - self.beta)))

    @property
    def resolution_ratio(self) -> float:
        """``L / s``; isotropy of the torus kernel needs this to be large."""
        return self.window.L / self.bandwidth

    def spectrum_to_csv(self, path) -> None:
        names = ["k1", "k2"][: self.window.d] + ["beta"]
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(names)
            for k, b in zip(self.freqs.tolist(), self.beta.tolist()):
                w.writerow([*k, repr(b)])

    def to_dict(self) -> dict:
        return {"lam": self.lam, "eps": self.eps, "window": self.window.to_dict(),
                "bandwidth": self.bandwidth, "M": self.M, "rank_mean": self.expected_count,
                "L_over_s": self.resolution_ratio}


def _truncation(peak: float, c: float, d: int, budget: float) -> int:
    """Smallest ``M`` whose dropped mass is below ``budget`` and edge eigenvalue below EDGE_TOL.

    Per axis the eigenvalues are ``exp(-c^2 k^2)``; the one-sided tail beyond
    ``M`` is at most ``sqrt(pi) / (2c) * erfc(c M)``.  In two dimensions the
    dropped mass is ``peak * (S^2 - S_M^2) <= peak * 2 S * (S - S_M)``.
    """
    full = 1.0 + math.sqrt(math.pi) / c          # bound on the full 1d sum S
    factor = peak * math.sqrt(math.pi) / c * (1.0 if d == 1 else 2.0 * full)
    ratio = budget / factor
    m_mass = 0.0 if ratio >= 1.0 else float(erfcinv(ratio)) / c
    m_edge = 0.0 if peak <= EDGE_TOL else math.sqrt(math.log(peak / EDGE_TOL)) / c
    M = math.ceil(max(m_mass, m_edge))
    # the erfc bound is continuous in M; nudge up while the exact bound is violated
    while factor * erfc(c * M) >= budget:
        M += 1
    return M


@functools.lru_cache(maxsize=64)
def dpp_build(lam: float, eps: float, window: Window) -> DppModel:
    """Build (and cache) the truncated torus spectrum of the Gaussian-kernel DPP."""
    if not lam > 0:
        raise ValueError("intensity must be positive")
    if eps < 0:
        raise ValueError("repulsion exponent must be nonnegative")
    if not window.is_torus:
        raise ValueError("the spectral DPP sampler needs a torus window")
    d, L = window.d, window.L
    s = dpp_bandwidth(lam, eps, d)
    peak = lam * (math.sqrt(math.pi) * s) ** d
    if peak > 1.0 + 1e-12:
        raise ValueError(f"spectrum violation: sup beta = {peak} > 1")
    peak = min(peak, 1.0)   # eps = 0 gives exactly 1 up to rounding
    c = math.pi * s / L
    M = _truncation(peak, c, d, MASS_TOL * lam * L**d)
    k1 = np.arange(-M, M + 1)
    if d == 1:
        freqs = k1[:, None]
    else:
        freqs = np.stack(np.meshgrid(k1, k1, indexing="ij"), axis=-1).reshape(-1, 2)
    beta = peak * np.exp(-(c * c) * np.sum(freqs.astype(float) ** 2, axis=1))
    freqs.setflags(write=False)
    beta.setflags(write=False)
    return DppModel(float(lam), float(eps), window, s, M, freqs, beta)


def _local_side(model: DppModel, lo: np.ndarray, hi: np.ndarray) -> float:
    return float(np.max(hi - lo)) + LOCAL_MARGIN * model.bandwidth


def sample_dpp(model: DppModel, rng: np.random.Generator, region=None,
               use_numba: bool | None = None) -> PointPattern:
    """Draw one DPP configuration.

    Without ``region`` the whole torus is sampled.  With ``region=(lo, hi)``
    only the restriction to that box is returned; when the box plus a margin
    of ``8 s`` is smaller than the torus, it is drawn from the DPP on a
    sub-torus of that side.  For points inside the box the two kernels differ
    by periodic images at distance at least ``8 s``, i.e. by a factor of at
    most ``exp(-64)``.
    """
    window = model.window
    if region is None:
        pts = _draw(model, rng, use_numba)
        return PointPattern(pts % window.L, model.lam, window)
    lo, hi = (np.broadcast_to(np.asarray(b, dtype=float), (window.d,)) for b in region)
    side = _local_side(model, lo, hi)
    if side >= window.L:
        pts = _draw(model, rng, use_numba) % window.L
    else:
        sub = dpp_build(model.lam, model.eps, Window(window.d, side, "torus"))
        origin = lo - 0.5 * LOCAL_MARGIN * model.bandwidth
        pts = _draw(sub, rng, use_numba) + origin
        keep = np.all((pts >= lo) & (pts <= hi), axis=1)
        pts = pts[keep] % window.L
    return PointPattern(pts, model.lam, window)


def _draw(model: DppModel, rng: np.random.Generator, use_numba) -> np.ndarray:
    chosen = model.freqs[rng.random(len(model.beta)) < model.beta]
    if len(chosen) == 0:
        return np.empty((0, model.window.d))
    return _kernels.projection_sample(chosen, model.window.L, rng,
                                      max_proposals=MAX_PROPOSALS, use_numba=use_numba)


def torus_displacement(x, y, L: float) -> np.ndarray:
    disp = np.asarray(y, dtype=float) - np.asarray(x, dtype=float)
    return disp - L * np.round(disp / L)


def kernel_eval(model: DppModel, x, y) -> np.ndarray:
    """``lam * exp(-dist(x, y)^2 / s^2)`` with the torus distance."""
    d = model.window.d
    disp = torus_displacement(np.reshape(x, (-1, d)), np.reshape(y, (-1, d)), model.window.L)
    r2 = np.sum(disp * disp, axis=1)
    out = model.lam * np.exp(-r2 / model.bandwidth**2)
    return out[0] if out.size == 1 else out


def kernel_l2_integral(model: DppModel) -> float:
    """``int |K(0, x)|^2 dx = lam^2 (pi/2)^(d/2) s^d = 2^(-d/2) lam^(1 - eps)``."""
    d = model.window.d
    return model.lam**2 * (math.pi / 2.0) ** (d / 2.0) * model.bandwidth**d


def pair_correlation(model: DppModel, r) -> np.ndarray:
    """``rho_2(0, r) / lam^2 = 1 - exp(-2 r^2 / s^2)``."""
    r = np.asarray(r, dtype=float)
    if np.any(r < 0):
        raise ValueError("distance must be nonnegative")
    return (-np.expm1(-2.0 * r * r / model.bandwidth**2))[()]


def empirical_pair_correlation(patterns: Sequence[PointPattern], edges, lam: float) -> np.ndarray:
    """Ratio-type pair-correlation estimate on a 1d torus from replicate patterns.

    Counts ordered pairs with torus distance in each bin and divides by the
    Poisson expectation ``lam^2 * L * 2 * width`` per pattern.
    """
    edges = np.asarray(edges, dtype=float)
    counts = np.zeros(len(edges) - 1)
    vol = 0.0
    for pat in patterns:
        if pat.window.d != 1:
            raise ValueError("estimator implemented for d = 1")
        x = pat.points[:, 0]
        dist = np.abs(torus_displacement(x[:, None], x[None, :], pat.window.L))
        dist = dist[~np.eye(len(x), dtype=bool)]
        counts += np.histogram(dist, bins=edges)[0]
        vol += pat.window.L
    return counts / (lam**2 * vol * 2.0 * np.diff(edges))
