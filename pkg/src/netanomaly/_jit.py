"""Numba switch for the hot kernels.

Every kernel in the package is written once as plain loops over numpy arrays
and decorated with :func:`njit`.  With numba available (the default) the
kernels are compiled; setting ``NETANOMALY_DISABLE_NUMBA=1`` leaves them as
ordinary Python functions, which is slower but needs nothing beyond numpy.

Both paths expose ``.py_func`` so tests and the benchmark can always reach
the interpreted version.
"""
import os

_FLAG = os.environ.get("NETANOMALY_DISABLE_NUMBA", "").strip().lower()

try:
    import numba
except ImportError:  # pragma: no cover - numba is a hard dependency
    numba = None

USE_NUMBA = numba is not None and _FLAG not in ("1", "true", "yes", "on")


def njit(*args, **kwargs):
    """``numba.njit(cache=True)`` or a no-op, depending on ``USE_NUMBA``."""

    def wrap(fn):
        if USE_NUMBA:
            kwargs.setdefault("cache", True)
            return numba.njit(**kwargs)(fn)
        fn.py_func = fn
        return fn

    if len(args) == 1 and callable(args[0]) and not kwargs:
        return wrap(args[0])
    return wrap
