"""Backend selection for the hot robustness kernels.

The sliding-window and until scans in :mod:`stl2vec.logic.kernels` exist in
two versions: a plain-python loop that numba can compile, and a vectorized
numpy fallback.  By default the numba version is used whenever numba imports
cleanly.  Set ``STL2VEC_NUMBA=0`` to force the numpy path (useful when
comparing backends or when compilation is unwanted).
"""

import os


def env_flag(name, default=True):
    raw = os.environ.get(name)
    if raw is None:
        return default
    return raw.strip().lower() not in ("0", "false", "no", "off", "")


NUMBA_REQUESTED = env_flag("STL2VEC_NUMBA", True)

if NUMBA_REQUESTED:
    try:
        from numba import njit
        HAVE_NUMBA = True
    except ImportError:
        HAVE_NUMBA = False
else:
    HAVE_NUMBA = False

if not HAVE_NUMBA:
    def njit(*args, **kwargs):  # noqa: D103
        if args and callable(args[0]):
            return args[0]

        def wrap(fn):
            return fn
        return wrap


def backend_name():
    """Name of the kernel backend actually in use."""
    return "numba" if HAVE_NUMBA else "numpy"


def worker_count(default=1):
    """Worker process count for dataset generation.

    ``STL2VEC_WORKERS`` overrides the caller's default when set to a
    positive integer.
    """
    raw = os.environ.get("STL2VEC_WORKERS")
    if raw is None:
        return default
    try:
        n = int(raw)
    except ValueError:
        return default
    return n if n >= 1 else default
