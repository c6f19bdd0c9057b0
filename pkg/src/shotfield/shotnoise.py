"""Response functions and evaluation of the shot-noise field.

The field at ``z`` is ``I(z) = sum_n P_n * ell(z - X_n)``; its centred and
scaled version is ``(I(z) - lam * p * c_ell) / g(lam)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Mapping

import numpy as np

from . import _kernels
from .amplitudes import AmplitudeLaw
from .pointproc import PointPattern

# ell(x) <= TAIL_TOL * b_ell beyond the effective radius
TAIL_TOL = 1e-12
_LOG_TAIL = -math.log(TAIL_TOL)


def as_points(x, d: int) -> tuple[np.ndarray, tuple]:
    """Flatten ``x`` to an ``(N, d)`` array; also return the per-point output shape.

    The trailing axis holds coordinates.  In one dimension a trailing axis of
    length other than one is read as a list of scalar coordinates.
    """
    x = np.asarray(x, dtype=float)
    if d == 1 and (x.ndim == 0 or x.shape[-1] != 1):
        return x.reshape(-1, 1), x.shape
    if x.shape[-1] != d:
        raise ValueError(f"expected trailing axis of length {d}, got shape {x.shape}")
    return x.reshape(-1, d), x.shape[:-1]


def _unit_ball_volume(d: int) -> float:
    return math.pi ** (d / 2) / math.gamma(d / 2 + 1)


@dataclass(frozen=True)
class ResponseFn:
    """Bounded, integrable, radial response ``ell``.

    Subclasses fix the profile; ``sup`` (b_ell), ``integral`` (c_ell) and
    ``radius`` (effective support) are derived from the parameters.
    """

    dim: int = 1

    kind_code = -1

    def __post_init__(self):
        if self.dim not in (1, 2):
            raise ValueError("dimension must be 1 or 2")

    # subclass hooks
    @property
    def sup(self) -> float:
        raise NotImplementedError

    @property
    def integral(self) -> float:
        raise NotImplementedError

    @property
    def radius(self) -> float:
        raise NotImplementedError

    @property
    def length_scale(self) -> float:
        """Scale on which ``ell`` varies; sets quadrature panel widths."""
        raise NotImplementedError

    @property
    def _params(self) -> tuple[float, float]:
        raise NotImplementedError

    @property
    def discontinuous(self) -> bool:
        return False

    def __call__(self, x) -> np.ndarray:
        pts, shape = as_points(x, self.dim)
        h, s = self._params
        return _kernels.profile_numpy(self.kind_code, h, s, np.sum(pts * pts, axis=1)).reshape(shape)[()]

    def profile(self, r2: float) -> float:
        """Scalar evaluation from a squared distance."""
        h, s = self._params
        return _kernels._profile_scalar(self.kind_code, h, s, r2)

    def to_dict(self) -> dict[str, Any]:
        raise NotImplementedError


@dataclass(frozen=True)
class GaussBump(ResponseFn):
    height: float = 1.0
    width: float = 1.0

    kind_code = _kernels.GAUSS_BUMP

    def __post_init__(self):
        super().__post_init__()
        if not (self.height > 0 and self.width > 0):
            raise ValueError("height and width must be positive")

    @property
    def sup(self):
        return self.height

    @property
    def integral(self):
        return self.height * (math.sqrt(math.pi) * self.width) ** self.dim

    @property
    def radius(self):
        return self.width * math.sqrt(_LOG_TAIL)

    @property
    def length_scale(self):
        return self.width

    @property
    def _params(self):
        return self.height, self.width

    def to_dict(self):
        return {"kind": "gauss_bump", "height": self.height, "width": self.width}


@dataclass(frozen=True)
class BallIndicator(ResponseFn):
    r: float = 1.0

    kind_code = _kernels.BALL_INDICATOR

    def __post_init__(self):
        super().__post_init__()
        if not self.r > 0:
            raise ValueError("radius must be positive")

    @property
    def sup(self):
        return 1.0

    @property
    def integral(self):
        return _unit_ball_volume(self.dim) * self.r**self.dim

    @property
    def radius(self):
        return self.r

    @property
    def length_scale(self):
        return self.r

    @property
    def discontinuous(self):
        return True

    @property
    def _params(self):
        return 1.0, self.r

    def to_dict(self):
        return {"kind": "ball_indicator", "radius": self.r}


@dataclass(frozen=True)
class ExpDecay(ResponseFn):
    height: float = 1.0
    rate: float = 1.0

    kind_code = _kernels.EXP_DECAY

    def __post_init__(self):
        super().__post_init__()
        if not (self.height > 0 and self.rate > 0):
            raise ValueError("height and rate must be positive")

    @property
    def sup(self):
        return self.height

    @property
    def integral(self):
        # int exp(-a|x|) dx = 2/a (d=1), 2 pi / a^2 (d=2)
        d = self.dim
        return self.height * d * _unit_ball_volume(d) * math.gamma(d) / self.rate**d

    @property
    def radius(self):
        return _LOG_TAIL / self.rate

    @property
    def length_scale(self):
        return 1.0 / self.rate

    @property
    def _params(self):
        return self.height, self.rate

    def to_dict(self):
        return {"kind": "exp_decay", "height": self.height, "rate": self.rate}


def response_from_dict(entry: Mapping[str, Any], dim: int = 1) -> ResponseFn:
    kind = str(entry["kind"]).lower()
    if kind == "gauss_bump":
        return GaussBump(dim, float(entry.get("height", 1.0)), float(entry.get("width", 1.0)))
    if kind == "ball_indicator":
        return BallIndicator(dim, float(entry.get("radius", entry.get("r", 1.0))))
    if kind == "exp_decay":
        return ExpDecay(dim, float(entry.get("height", 1.0)), float(entry.get("rate", 1.0)))
    raise ValueError(f"unknown response function {kind!r}")


def response_eval(ell: ResponseFn, x) -> np.ndarray:
    return ell(x)


@dataclass(frozen=True)
class FddQuery:
    """Positions ``z_1..z_m`` (shape ``(m, d)``) and weights ``s_j >= 0``.

    A flat sequence of positions is read as ``m`` points in one dimension.
    """

    positions: np.ndarray
    weights: np.ndarray = field(default=None)

    def __post_init__(self):
        pos = np.asarray(self.positions, dtype=float)
        if pos.ndim <= 1:
            pos = pos.reshape(-1, 1)
        w = np.ones(len(pos)) if self.weights is None else \
            np.atleast_1d(np.asarray(self.weights, dtype=float))
        if len(pos) < 1:
            raise ValueError("a query needs at least one position")
        if w.shape != (len(pos),):
            raise ValueError("one weight per position is required")
        if (w < 0).any():
            raise ValueError("weights must be nonnegative")
        object.__setattr__(self, "positions", pos)
        object.__setattr__(self, "weights", w)

    @property
    def m(self) -> int:
        return len(self.positions)

    @property
    def dim(self) -> int:
        return self.positions.shape[1]

    def with_weights(self, weights) -> "FddQuery":
        return FddQuery(self.positions, weights)

    def hull(self, pad: float) -> tuple[np.ndarray, np.ndarray]:
        """Axis-aligned box containing every ball ``B(z_j, pad)``."""
        return self.positions.min(axis=0) - pad, self.positions.max(axis=0) + pad

    def to_dict(self) -> dict[str, Any]:
        return {"positions": self.positions.tolist(), "weights": self.weights.tolist()}


def xi_eval(q: FddQuery, ell: ResponseFn, x) -> np.ndarray:
    """``xi(x) = sum_j s_j ell(z_j - x)`` at one point or an array of points."""
    pts, shape = as_points(x, q.dim)
    disp = q.positions[None, :, :] - pts[:, None, :]
    h, s = ell._params
    vals = _kernels.profile_numpy(ell.kind_code, h, s, np.sum(disp * disp, axis=2))
    return (vals @ q.weights).reshape(shape)[()]


def field_eval(
    pattern: PointPattern,
    amplitudes,
    ell: ResponseFn,
    z,
    use_numba: bool | None = None,
) -> np.ndarray:
    """Shot-noise values ``I(z_j)`` for a realised pattern and its marks.

    Displacements wrap on the torus when the pattern's window is in torus
    mode.  Only points within ``ell.radius`` of a query contribute (the
    response there is below ``1e-12 * b_ell``, or exactly zero for balls).
    """
    amplitudes = np.asarray(amplitudes, dtype=float)
    if len(amplitudes) != len(pattern):
        raise ValueError(f"{len(amplitudes)} amplitudes for {len(pattern)} points")
    z = np.atleast_2d(np.asarray(z, dtype=float))
    if z.shape[1] != pattern.window.d:
        z = z.reshape(-1, pattern.window.d)
    h, s = ell._params
    period = pattern.window.L if pattern.window.boundary == "torus" else 0.0
    return _kernels.bucketed_field(pattern.points, amplitudes, z, ell.kind_code, h, s,
                                   ell.radius, period, use_numba=use_numba)


def field_eval_bruteforce(pattern: PointPattern, amplitudes, ell: ResponseFn, z) -> np.ndarray:
    z = np.atleast_2d(np.asarray(z, dtype=float)).reshape(-1, pattern.window.d)
    h, s = ell._params
    period = pattern.window.L if pattern.window.boundary == "torus" else 0.0
    return _kernels.brute_field(pattern.points, amplitudes, z, ell.kind_code, h, s,
                                ell.radius, period)


def centralize_scale(values, lam: float, law: AmplitudeLaw, ell: ResponseFn) -> np.ndarray:
    """``(I - lam * p * c_ell) / g(lam)`` componentwise."""
    if lam <= 0:
        raise ValueError("intensity must be positive")
    values = np.asarray(values, dtype=float)
    return (values - lam * law.mean * ell.integral) / law.scaling_g(lam)
