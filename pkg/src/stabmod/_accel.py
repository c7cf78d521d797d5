"""Optional numba acceleration.

Set ``STABMOD_NUMBA=0`` before import to force the pure-numpy code paths.
"""
import os

USE_NUMBA = os.environ.get("STABMOD_NUMBA", "1").lower() not in ("0", "false", "no", "off")

if USE_NUMBA:
    try:
        from numba import njit
    except ImportError:  # pragma: no cover
        USE_NUMBA = False

if not USE_NUMBA:

    def njit(*args, **kwargs):
        if len(args) == 1 and callable(args[0]) and not kwargs:
            return args[0]
        return lambda f: f


def opts():
    return dict(cache=True, nogil=True)
