"""Kernel backend selection.

Hot loops ship twice: a numba ``@njit`` version and a vectorised numpy
version.  ``OHMOPT_BACKEND=numpy`` forces the numpy path; by default numba is
used whenever it imports.
"""
import os

_requested = os.environ.get("OHMOPT_BACKEND", "numba").strip().lower()
if _requested not in ("numba", "numpy"):
    raise ValueError(f"OHMOPT_BACKEND must be 'numba' or 'numpy', got {_requested!r}")

try:
    import numba

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None
    HAVE_NUMBA = False

USE_NUMBA = HAVE_NUMBA and _requested == "numba"
BACKEND = "numba" if USE_NUMBA else "numpy"


def njit(*args, **kwargs):
    """``numba.njit(cache=True)`` when numba is importable, identity otherwise.

    The decorated loop kernels stay importable (and runnable, slowly) without
    numba so the numpy-vs-numba tests can still compare the two.
    """
    kwargs.setdefault("cache", True)
    if HAVE_NUMBA:
        return numba.njit(*args, **kwargs)
    if args and callable(args[0]):
        return args[0]
    return lambda f: f


def pick(nb_impl, np_impl):
    return nb_impl if USE_NUMBA else np_impl
