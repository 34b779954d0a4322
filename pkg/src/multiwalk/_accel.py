"""Backend switch for the hot kernels.

Set ``MULTIWALK_DISABLE_NUMBA=1`` before importing :mod:`multiwalk` to force
the pure-numpy kernels even when numba is installed.
"""
from __future__ import annotations

import os

_FLAG = os.environ.get("MULTIWALK_DISABLE_NUMBA", "").strip().lower()
_DISABLED = _FLAG not in ("", "0", "false", "no")

try:
    if _DISABLED:
        raise ImportError("disabled by MULTIWALK_DISABLE_NUMBA")
    import numba as _numba
except ImportError:  # pragma: no cover - exercised only without numba
    _numba = None

USE_NUMBA = _numba is not None


def njit(*args, **kwargs):
    """``numba.njit`` when available, otherwise a no-op decorator."""
    if USE_NUMBA:
        return _numba.njit(*args, **kwargs)
    if len(args) == 1 and callable(args[0]) and not kwargs:
        return args[0]
    return lambda fn: fn


def backend_name() -> str:
    return "numba" if USE_NUMBA else "numpy"
