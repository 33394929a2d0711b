"""Optional numba acceleration.

Set ``GAINBIN_DISABLE_JIT=1`` to force the pure-numpy kernels (useful for
debugging and for machines without a working numba/llvmlite install).
"""
import os

_disabled = os.environ.get("GAINBIN_DISABLE_JIT", "").strip().lower() in ("1", "true", "yes")

try:
    if _disabled:
        raise ImportError
    from numba import njit as _njit

    HAVE_NUMBA = True
except ImportError:
    _njit = None
    HAVE_NUMBA = False


def njit(fn):
    """``numba.njit(cache=True)`` when numba is usable, otherwise identity."""
    if HAVE_NUMBA:
        return _njit(cache=True, nogil=True)(fn)
    return fn
