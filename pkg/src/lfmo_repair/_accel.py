"""Optional numba acceleration.

Hot kernels are written once as plain Python over numpy arrays and wrapped
with :func:`maybe_njit`.  Setting ``LFMO_REPAIR_DISABLE_NUMBA=1`` (or running
without numba installed) leaves them as ordinary Python functions, which is
the reference path the benchmark compares against.
"""

from __future__ import annotations

import os
from typing import Any, Callable

_DISABLED = os.environ.get("LFMO_REPAIR_DISABLE_NUMBA", "").strip().lower() in {"1", "true", "yes", "on"}

try:
    if _DISABLED:
        raise ImportError
    from numba import njit as _njit

    HAVE_NUMBA = True
except ImportError:
    _njit = None
    HAVE_NUMBA = False


def maybe_njit(func: Callable[..., Any] | None = None, **options: Any):
    """``numba.njit`` when acceleration is enabled, identity otherwise."""

    def wrap(f: Callable[..., Any]) -> Callable[..., Any]:
        if not HAVE_NUMBA:
            return f
        return _njit(cache=True, **options)(f)

    if func is not None:
        return wrap(func)
    return wrap


def python_impl(func: Callable[..., Any]) -> Callable[..., Any]:
    """Return the un-jitted body of a kernel (itself when numba is off)."""
    return getattr(func, "py_func", func)
