"""Hot numeric kernels: projection-DPP sampling and bucketed field sums.

Each kernel exists twice.  The ``*_numba`` variant is a scalar-loop
implementation compiled with numba; the ``*_numpy`` variant is vectorized
numpy.  Both consume the random stream identically, so for a given seed they
return the same points (up to floating-point ties in an acceptance test, which
have probability ~1e-16 per comparison).  The public names at the bottom pick
one according to :data:`shotfield._accel.USE_NUMBA`.
"""

from __future__ import annotations

import math

import numpy as np

from ._accel import USE_NUMBA, njit

GAUSS_BUMP = 0
BALL_INDICATOR = 1
EXP_DECAY = 2

# Orthogonality block size for the early-exit projection in the numba sampler.
_BLOCK = 32


class SamplerBreakdown(RuntimeError):
    """Raised when the rejection loop of the projection sampler exceeds its cap."""


# ---------------------------------------------------------------------------
# response profiles


@njit
def _profile_scalar(kind, height, scale, r2):
    if kind == GAUSS_BUMP:
        return height * math.exp(-r2 / (scale * scale))
    if kind == BALL_INDICATOR:
        return 1.0 if r2 <= scale * scale else 0.0
    return height * math.exp(-scale * math.sqrt(r2))


def profile_numpy(kind, height, scale, r2):
    r2 = np.asarray(r2, dtype=float)
    if kind == GAUSS_BUMP:
        return height * np.exp(-r2 / (scale * scale))
    if kind == BALL_INDICATOR:
        return (r2 <= scale * scale).astype(float)
    return height * np.exp(-scale * np.sqrt(r2))


# ---------------------------------------------------------------------------
# projection DPP with Fourier eigenfunctions on the torus [0, L)^d


@njit
def proposal_batch_size(n, i):
    """Number of proposals drawn together at step ``i`` of an ``n``-point run."""
    return max(1, int(math.ceil(n / (n - i))))


@njit
def _projection_numba(freqs, L, rng, max_proposals):
    n, d = freqs.shape
    pts = np.empty((n, d))
    if n == 0:
        return pts, 0
    # rows hold conj(u_j) so that U[:i] @ v gives <u_j, v>
    U = np.zeros((n, n), dtype=np.complex128)
    v = np.empty(n, dtype=np.complex128)
    w = np.empty(n, dtype=np.complex128)
    vol = L**d
    scale = 1.0 / math.sqrt(vol)
    bound = n / vol
    used = 0
    for i in range(n):
        b = proposal_batch_size(n, i)
        done = False
        while not done:
            draws = np.empty((b, d + 1))
            for r in range(b):
                for c in range(d + 1):
                    draws[r, c] = rng.random()
            for r in range(b):
                if done:
                    break
                used += 1
                if used > max_proposals:
                    return pts, -1
                for k in range(n):
                    ph = 0.0
                    for c in range(d):
                        ph += freqs[k, c] * draws[r, c]
                    ph *= 2.0 * math.pi
                    v[k] = scale * complex(math.cos(ph), math.sin(ph))
                thresh = bound * (1.0 - draws[r, d])
                mass = 0.0
                ok = True
                j0 = 0
                while j0 < i:
                    j1 = min(j0 + _BLOCK, i)
                    wb = np.dot(U[j0:j1], v)
                    for j in range(j1 - j0):
                        w[j0 + j] = wb[j]
                        mass += wb[j].real ** 2 + wb[j].imag ** 2
                    if mass >= thresh:
                        ok = False
                        break
                    j0 = j1
                if not ok:
                    continue
                done = True
                for c in range(d):
                    pts[i, c] = draws[r, c] * L
                if i > 0:
                    # two-pass Gram-Schmidt keeps U orthonormal to rounding
                    v -= np.dot(w[:i], np.conj(U[:i]))
                    w2 = np.dot(U[:i], v)
                    v -= np.dot(w2, np.conj(U[:i]))
                nrm = math.sqrt((v.real**2 + v.imag**2).sum())
                for k in range(n):
                    U[i, k] = np.conj(v[k]) / nrm
    return pts, used


def _projection_numpy(freqs, L, rng, max_proposals):
    n, d = freqs.shape
    pts = np.empty((n, d))
    if n == 0:
        return pts, 0
    U = np.zeros((n, n), dtype=np.complex128)
    vol = L**d
    scale = 1.0 / math.sqrt(vol)
    bound = n / vol
    used = 0
    for i in range(n):
        b = proposal_batch_size(n, i)
        while True:
            draws = rng.random((b, d + 1))
            V = scale * np.exp(2j * np.pi * (draws[:, :d] @ freqs.T))
            if i:
                W = V @ U[:i].T
                mass = (W.real**2 + W.imag**2).sum(axis=1)
            else:
                mass = np.zeros(b)
            accept = mass < bound * (1.0 - draws[:, d])
            hit = int(np.argmax(accept)) if accept.any() else b
            used += min(hit + 1, b)
            if used > max_proposals:
                return pts, -1
            if hit < b:
                break
        pts[i] = draws[hit, :d] * L
        v = V[hit]
        if i:
            v = v - W[hit] @ np.conj(U[:i])
            v = v - (U[:i] @ v) @ np.conj(U[:i])
        U[i] = np.conj(v) / np.sqrt((v.real**2 + v.imag**2).sum())
    return pts, used


# ---------------------------------------------------------------------------
# bucketed shot-noise sums


def _grid_layout(points, period, cell, lo):
    """Cell geometry shared by both field backends."""
    d = points.shape[1]
    if period > 0:
        ncell = np.full(d, max(1, int(period // cell)), dtype=np.int64)
        width = np.full(d, period / ncell[0])
        origin = np.zeros(d)
    else:
        origin = lo.astype(float)
        hi = np.maximum(points.max(axis=0), origin) if len(points) else origin
        ncell = (np.floor((hi - origin) / cell).astype(np.int64) + 1).clip(min=1)
        width = np.full(d, cell)
    return origin, width, ncell


def _cell_keys(points, origin, width, ncell, period):
    idx = np.floor((points - origin) / width).astype(np.int64)
    if period > 0:
        idx %= ncell
    else:
        idx = np.clip(idx, 0, ncell - 1)
    key = idx[:, 0].copy()
    for c in range(1, points.shape[1]):
        key = key * ncell[c] + idx[:, c]
    return key


@njit
def _field_numba(pts, amps, order, starts, queries, origin, width, ncell, period,
                 kind, height, scale, rtol):
    m, d = queries.shape
    out = np.zeros(m)
    r2max = rtol * rtol
    # per axis: list of distinct neighbour offsets
    for q in range(m):
        qc = np.empty(d, dtype=np.int64)
        for c in range(d):
            qc[c] = int(math.floor((queries[q, c] - origin[c]) / width[c]))
        span = np.empty(d, dtype=np.int64)
        for c in range(d):
            span[c] = min(3, ncell[c]) if period > 0 else 3
        total = 1
        for c in range(d):
            total *= span[c]
        acc = 0.0
        for t in range(total):
            rem = t
            key = 0
            valid = True
            for c in range(d):
                off = rem % span[c]
                rem //= span[c]
                if period > 0 and ncell[c] < 3:
                    cc = off
                else:
                    cc = qc[c] + off - 1
                    if period > 0:
                        cc %= ncell[c]
                    elif cc < 0 or cc >= ncell[c]:
                        valid = False
                key = key * ncell[c] + cc
            if not valid:
                continue
            for s in range(starts[key], starts[key + 1]):
                p = order[s]
                r2 = 0.0
                for c in range(d):
                    dx = queries[q, c] - pts[p, c]
                    if period > 0:
                        dx -= period * math.floor(dx / period + 0.5)
                    r2 += dx * dx
                if r2 <= r2max:
                    acc += amps[p] * _profile_scalar(kind, height, scale, r2)
        out[q] = acc
    return out


def _field_numpy(pts, amps, order, starts, queries, origin, width, ncell, period,
                 kind, height, scale, rtol):
    m, d = queries.shape
    out = np.zeros(m)
    spans = [range(ncell[c]) if (period > 0 and ncell[c] < 3) else range(-1, 2)
             for c in range(d)]
    for q in range(m):
        qc = np.floor((queries[q] - origin) / width).astype(np.int64)
        keys = []
        for offs in np.array(np.meshgrid(*spans, indexing="ij")).reshape(d, -1).T:
            if period > 0:
                cc = np.where(ncell < 3, offs, (qc + offs) % ncell)
            else:
                cc = qc + offs
                if (cc < 0).any() or (cc >= ncell).any():
                    continue
            key = 0
            for c in range(d):
                key = key * ncell[c] + cc[c]
            keys.append(key)
        idx = np.concatenate([order[starts[k]:starts[k + 1]] for k in keys]) if keys else \
            np.empty(0, dtype=np.int64)
        disp = queries[q] - pts[idx]
        if period > 0:
            disp -= period * np.floor(disp / period + 0.5)
        r2 = (disp * disp).sum(axis=1)
        near = r2 <= rtol * rtol
        out[q] = np.sum(amps[idx][near] * profile_numpy(kind, height, scale, r2[near]))
    return out


@njit
def _direct_numba(pts, amps, queries, period, kind, height, scale, rtol):
    m, d = queries.shape
    out = np.zeros(m)
    r2max = rtol * rtol
    for q in range(m):
        acc = 0.0
        for p in range(pts.shape[0]):
            r2 = 0.0
            for c in range(d):
                dx = queries[q, c] - pts[p, c]
                if period > 0:
                    dx -= period * math.floor(dx / period + 0.5)
                r2 += dx * dx
            if r2 <= r2max:
                acc += amps[p] * _profile_scalar(kind, height, scale, r2)
        out[q] = acc
    return out


# below this many queries a direct scan beats sorting points into cells
DIRECT_MAX_QUERIES = 8


def bucketed_field(points, amps, queries, kind, height, scale, rtol, period=0.0,
                   use_numba=None):
    """Sum ``amps[n] * profile(|q - x_n|)`` over points within ``rtol`` of each query.

    ``period > 0`` wraps displacements on the torus ``[0, period)^d``.  Cells
    have side ``>= rtol`` so only the 3^d neighbouring cells are scanned.  With
    numba and only a handful of queries the points are scanned directly, which
    avoids the sort.
    """
    points = np.ascontiguousarray(points, dtype=float)
    queries = np.ascontiguousarray(queries, dtype=float)
    amps = np.ascontiguousarray(amps, dtype=float)
    if len(points) == 0:
        return np.zeros(len(queries))
    numba_on = USE_NUMBA if use_numba is None else use_numba
    if numba_on and len(queries) <= DIRECT_MAX_QUERIES:
        return _direct_numba(points, amps, queries, float(period), int(kind), float(height),
                             float(scale), float(rtol))
    lo = np.minimum(points.min(axis=0), queries.min(axis=0))
    cell = max(rtol, 1e-300)
    origin, width, ncell = _grid_layout(points, period, cell, lo)
    keys = _cell_keys(points, origin, width, ncell, period)
    order = np.argsort(keys, kind="stable")
    starts = np.searchsorted(keys[order], np.arange(int(np.prod(ncell)) + 1))
    fn = _field_numba if numba_on else _field_numpy
    return fn(points, amps, order, starts, queries, origin, width, ncell, float(period),
              int(kind), float(height), float(scale), float(rtol))


def brute_field(points, amps, queries, kind, height, scale, rtol, period=0.0):
    """All-pairs reference for :func:`bucketed_field` (same ``rtol`` truncation)."""
    points = np.asarray(points, dtype=float)
    queries = np.asarray(queries, dtype=float)
    disp = queries[:, None, :] - points[None, :, :]
    if period > 0:
        disp -= period * np.floor(disp / period + 0.5)
    r2 = (disp * disp).sum(axis=2)
    vals = np.where(r2 <= rtol * rtol, profile_numpy(kind, height, scale, r2), 0.0)
    return vals @ np.asarray(amps, dtype=float)


def projection_sample(freqs, L, rng, max_proposals=10**7, use_numba=None):
    """Sample the projection DPP spanned by ``exp(2 pi i k.x / L)``, ``k`` in ``freqs``.

    Sequential (HKPV) sampling: point ``i`` is drawn by rejection from the
    uniform proposal with envelope ``n / L^d`` (the diagonal of the full
    projection kernel, which dominates every conditional diagonal).
    """
    freqs = np.ascontiguousarray(freqs, dtype=float)
    if freqs.ndim == 1:
        freqs = freqs[:, None]
    fn = _projection_numba if (USE_NUMBA if use_numba is None else use_numba) \
        else _projection_numpy
    pts, used = fn(freqs, float(L), rng, int(max_proposals))
    if used < 0:
        raise SamplerBreakdown(
            f"projection sampler exceeded {max_proposals} proposals for rank {len(freqs)}")
    return pts
