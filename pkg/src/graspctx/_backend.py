"""Kernel backend selection.

``GRASPCTX_BACKEND=numpy`` forces the pure-numpy kernels; anything else (or
unset) uses numba when it is importable.
"""

import os

_requested = os.environ.get("GRASPCTX_BACKEND", "numba").strip().lower()

try:
    import numba

    NUMBA_AVAILABLE = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None
    NUMBA_AVAILABLE = False

USE_NUMBA = NUMBA_AVAILABLE and _requested != "numpy"
BACKEND = "numba" if USE_NUMBA else "numpy"


def njit(*args, **kwargs):
    """``numba.njit(cache=True)`` when numba is installed, identity otherwise.

    Kernels are compiled lazily on first call, so decorating with this does not
    cost anything when the numpy backend is selected.
    """
    kwargs.setdefault("cache", True)

    def decorator(func):
        if NUMBA_AVAILABLE:
            return numba.njit(**kwargs)(func)
        return func

    if args and callable(args[0]):
        return decorator(args[0])
    return decorator
