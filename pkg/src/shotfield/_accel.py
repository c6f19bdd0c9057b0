"""Backend selection for the hot kernels.

Numba is used when importable unless ``SHOTFIELD_DISABLE_NUMBA`` is set to a
truthy value (``1``, ``true``, ``yes``).  Every jitted kernel has a pure-numpy
twin in :mod:`shotfield._kernels` that consumes random numbers in the same
order, so both backends produce the same samples for the same seed.
"""

from __future__ import annotations

import os

_FLAG = os.environ.get("SHOTFIELD_DISABLE_NUMBA", "").strip().lower()

try:
    import numba

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None
    HAVE_NUMBA = False

USE_NUMBA = HAVE_NUMBA and _FLAG not in ("1", "true", "yes", "on")


def njit(*args, **kwargs):
    """``numba.njit`` with nogil/cache defaults; identity when numba is absent."""
    kwargs.setdefault("nogil", True)
    kwargs.setdefault("cache", True)
    if not HAVE_NUMBA:
        if args and callable(args[0]):
            return args[0]
        return lambda f: f
    return numba.njit(*args, **kwargs)


def backend_name() -> str:
    return "numba" if USE_NUMBA else "numpy"
