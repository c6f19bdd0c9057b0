"""Nyström discretisation of the DPP Laplace-transform operator.

For a DPP with kernel ``K`` the Laplace transform of the shot-noise field is
the Fredholm determinant ``det(I - K_a)`` of the operator with kernel
``a(x) K(x, y) a(y)``, ``a = sqrt(1 - L_P(xi / g))``.  On a composite
Gauss-Legendre grid the symmetrised matrix

    M_ij = sqrt(w_i) a(x_i) K(x_i, x_j) a(x_j) sqrt(w_j)

has the same nonzero spectrum as the Nyström operator.  In one dimension
``K`` is numerically banded once the nodes are sorted, so the matrix is kept
in LAPACK band storage and ``log det(I - M)`` comes from a banded Cholesky
factorisation (which also certifies that every eigenvalue is below one).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy import linalg

from .amplitudes import AmplitudeLaw
from .pointproc import DppModel, Window, dpp_build, kernel_l2_integral, torus_displacement
from .quadrature import gauss_legendre_panels
from .shotnoise import FddQuery, ResponseFn, xi_eval

__all__ = [
    "NystromGrid", "nystrom_grid", "DiscretizedOperator", "build_operator", "FredholmError",
    "fredholm_laplace", "TraceSeries", "trace_series", "higher_order_vanishing",
]

# exp(-r^2 / s^2) < 1e-17 beyond this many bandwidths
KERNEL_CUTOFF = 6.26
DENSE_LIMIT = 8000


class FredholmError(RuntimeError):
    """The discretised operator has an eigenvalue at or above one."""


@dataclass(frozen=True, eq=False)
class NystromGrid:
    nodes: np.ndarray      # (N, d), sorted along the axis in d = 1
    weights: np.ndarray    # (N,)
    order: int
    panel_width: float

    @property
    def size(self) -> int:
        return len(self.weights)

    @property
    def volume(self) -> float:
        return float(self.weights.sum())


def nystrom_grid(q: FddQuery, ell: ResponseFn, bandwidth: float, order: int = 4,
                 pad: float | None = None) -> NystromGrid:
    """Tensor composite Gauss-Legendre grid over the hull of the response supports.

    Panels are no wider than ``min(bandwidth, ell.length_scale) / 4``; ball
    edges are panel boundaries so discontinuities fall between nodes.
    """
    pad = ell.radius if pad is None else pad
    lo, hi = q.hull(pad)
    h = min(bandwidth, ell.length_scale) / 4.0
    axes = []
    for c in range(q.dim):
        br = ()
        if ell.discontinuous:
            br = tuple(q.positions[:, c] - ell.radius) + tuple(q.positions[:, c] + ell.radius)
        axes.append(gauss_legendre_panels(lo[c], hi[c], h, order, br))
    if q.dim == 1:
        x, w = axes[0]
        return NystromGrid(x[:, None], w, order, h)
    (x0, w0), (x1, w1) = axes
    X0, X1 = np.meshgrid(x0, x1, indexing="ij")
    nodes = np.stack([X0.ravel(), X1.ravel()], axis=1)
    return NystromGrid(nodes, np.outer(w0, w1).ravel(), order, h)


@dataclass(eq=False)
class DiscretizedOperator:
    """Symmetric Nyström matrix, dense or in upper band storage.

    ``band[u + i - j, j] = M[i, j]`` for ``i <= j`` when banded (``u`` the
    number of superdiagonals).
    """

    lam: float
    diag: np.ndarray
    dense: np.ndarray | None = None
    band: np.ndarray | None = None
    _logdet: float | None = field(default=None, repr=False)

    @property
    def size(self) -> int:
        return len(self.diag)

    @property
    def is_banded(self) -> bool:
        return self.band is not None

    @property
    def trace(self) -> float:
        return float(self.diag.sum())

    @property
    def trace_sq(self) -> float:
        """``Tr(M^2)``, the squared Hilbert-Schmidt norm."""
        if self.dense is not None:
            return float(np.sum(self.dense * self.dense))
        u = self.band.shape[0] - 1
        off = self.band[:u]
        return float(np.sum(self.diag**2) + 2.0 * np.sum(off * off))

    def to_dense(self) -> np.ndarray:
        if self.dense is not None:
            return self.dense
        n, u = self.size, self.band.shape[0] - 1
        out = np.zeros((n, n))
        for k in range(u + 1):
            off = u - k
            idx = np.arange(off, n)
            out[idx - off, idx] = self.band[k, off:]
            out[idx, idx - off] = self.band[k, off:]
        return out

    @cached_property
    def eigenvalues(self) -> np.ndarray:
        """Eigenvalues in decreasing order."""
        if self.size == 0:
            return np.zeros(0)
        if self.dense is not None:
            ev = linalg.eigvalsh(self.dense)
        else:
            ev = linalg.eig_banded(self.band, lower=False, eigvals_only=True)
        return ev[::-1]

    @property
    def logdet(self) -> float:
        """``log det(I - M)``; raises :class:`FredholmError` if some eigenvalue is >= 1."""
        if self._logdet is None:
            self._logdet = self._factor()
        return self._logdet

    def _factor(self) -> float:
        if self.size == 0 or not self.diag.any():
            return 0.0
        try:
            if self.dense is not None:
                c = linalg.cholesky(np.eye(self.size) - self.dense, lower=False)
                return 2.0 * float(np.sum(np.log(np.diag(c))))
            ab = -self.band
            ab[-1] += 1.0
            c = linalg.cholesky_banded(ab, lower=False)
            return 2.0 * float(np.sum(np.log(c[-1])))
        except linalg.LinAlgError as exc:
            raise FredholmError("I - M is not positive definite: an eigenvalue reached 1 "
                                "(grid too coarse or spectrum violation)") from exc

    def logdet_from_eigenvalues(self) -> float:
        ev = self.eigenvalues
        if ev.size and ev[0] >= 1.0:
            raise FredholmError(f"largest eigenvalue {ev[0]} >= 1")
        return float(np.sum(np.log1p(-ev)))


def _amplitude_factor(law: AmplitudeLaw, q: FddQuery, ell: ResponseFn, nodes, scale):
    xi = xi_eval(q, ell, nodes) / scale
    return np.sqrt(np.clip(law.laplace_complement(xi), 0.0, None))


def build_operator(model: DppModel, law: AmplitudeLaw, q: FddQuery, ell: ResponseFn,
                   grid: NystromGrid, scale: float = 1.0,
                   banded: bool | None = None) -> DiscretizedOperator:
    """Nyström matrix of ``a(x) K(x, y) a(y)`` with ``a = sqrt(1 - L_P(xi / scale))``.

    ``scale = 1`` gives the unscaled field; pass ``g(lam)`` for the centred one.
    """
    if q.dim != model.window.d:
        raise ValueError("query and model dimensions differ")
    nodes, w = grid.nodes, grid.weights
    sa = np.sqrt(w) * _amplitude_factor(law, q, ell, nodes, scale)
    diag = model.lam * sa * sa
    s, L = model.bandwidth, model.window.L
    if banded is None:
        banded = model.window.d == 1 and grid.size > DENSE_LIMIT
    if not banded:
        if grid.size > DENSE_LIMIT:
            raise ValueError(f"dense operator of size {grid.size} exceeds {DENSE_LIMIT} nodes; "
                             "lower the order or narrow the response")
        r2 = np.zeros((grid.size, grid.size))
        for k in range(nodes.shape[1]):
            dk = torus_displacement(nodes[:, None, k], nodes[None, :, k], L)
            r2 += dk * dk
        r2 *= -1.0 / (s * s)
        np.exp(r2, out=r2)
        r2 *= model.lam * sa[:, None] * sa[None, :]
        return DiscretizedOperator(model.lam, diag, dense=r2)
    if model.window.d != 1:
        raise ValueError("band storage needs d = 1")
    x = nodes[:, 0]
    if np.any(np.diff(x) < 0):
        raise ValueError("grid nodes must be sorted")
    if x[-1] - x[0] + KERNEL_CUTOFF * s >= L:
        raise ValueError("grid wraps around the torus; use the dense operator")
    cut = KERNEL_CUTOFF * s
    u = int(np.max(np.searchsorted(x, x + cut, side="right") - np.arange(len(x)) - 1))
    n = len(x)
    band = np.zeros((u + 1, n))
    band[u] = diag
    for off in range(1, u + 1):
        r = x[off:] - x[:-off]
        band[u - off, off:] = model.lam * np.exp(-(r * r) / (s * s)) * sa[off:] * sa[:-off]
    return DiscretizedOperator(model.lam, diag, band=band)


def fredholm_laplace(opr: DiscretizedOperator) -> float:
    """``det(I - M) = prod (1 - mu_i)``: the Laplace transform of the DPP field."""
    return math.exp(opr.logdet)


@dataclass(frozen=True)
class TraceSeries:
    partial_sums: list[float]
    logdet: float
    trace_sq: float
    remainder_bound: float | None

    @property
    def series_valid(self) -> bool:
        """The series remainder bound needs ``Tr(M^2) < 1``."""
        return self.remainder_bound is not None

    def to_dict(self) -> dict:
        return {"trace_partial_sums": self.partial_sums, "remainder_bound": self.remainder_bound,
                "logdet": self.logdet, "trace_sq": self.trace_sq}


def trace_series(opr: DiscretizedOperator, n_terms: int) -> TraceSeries:
    """Partial sums of ``sum_n Tr(M^n) / n`` and the tail bound beyond ``n_terms``.

    For ``n >= 2``, ``Tr(M^n) <= Tr(M^2)^(n/2)``, so with ``q = sqrt(Tr M^2) < 1``
    the tail is at most ``-log(1 - q) - sum_{n <= N} q^n / n``.  When
    ``Tr(M^2) >= 1`` no bound is returned.
    """
    if n_terms < 1:
        raise ValueError("need at least one term")
    ev = opr.eigenvalues
    sums, acc = [], 0.0
    for n in range(1, n_terms + 1):
        acc += float(np.sum(ev**n)) / n
        sums.append(acc)
    t2 = opr.trace_sq
    bound = None
    if t2 < 1.0:
        qn = math.sqrt(t2)
        bound = max(-math.log1p(-qn) - sum(qn**n / n for n in range(1, n_terms + 1)), 0.0)
    return TraceSeries(sums, opr.logdet, t2, bound)


def higher_order_vanishing(eps: float, window: Window, law: AmplitudeLaw, q: FddQuery,
                           ell: ResponseFn, lams, order: int = 4, scaled: bool = True) -> list[dict]:
    """Magnitude ``|log det(I - M) + Tr M|`` of the ``n >= 2`` terms across intensities.

    With ``scaled`` the operator uses ``xi / g(lam)`` as for the centred field.
    """
    rows = []
    for lam in lams:
        model = dpp_build(float(lam), float(eps), window)
        grid = nystrom_grid(q, ell, model.bandwidth, order)
        g = law.scaling_g(lam) if scaled else 1.0
        opr = build_operator(model, law, q, ell, grid, scale=g)
        ld = opr.logdet
        rows.append({"lam": float(lam), "trace": opr.trace, "logdet": ld,
                     "n2_contribution": abs(ld + opr.trace), "trace_sq": opr.trace_sq,
                     "kernel_l2": kernel_l2_integral(model), "grid_size": grid.size})
    return rows
