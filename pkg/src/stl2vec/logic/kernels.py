"""Sliding-window scans behind the robustness recursion.

Each kernel maps whole robustness signals to whole robustness signals so
that a formula is evaluated bottom-up with one array pass per operator.
Two implementations exist: explicit loops that numba compiles, and numpy
fallbacks built from shifted-slice reductions.  ``stl2vec.accel`` picks
which one the public names refer to; both stay importable for the
backend benchmark.
"""

import numpy as np

from ..accel import HAVE_NUMBA, njit


def _window_max_loop(x, a, b, n_out):
    out = np.empty(n_out)
    for t in range(n_out):
        m = x[t + a]
        for k in range(t + a + 1, t + b + 1):
            if x[k] > m:
                m = x[k]
        out[t] = m
    return out


def _window_min_loop(x, a, b, n_out):
    out = np.empty(n_out)
    for t in range(n_out):
        m = x[t + a]
        for k in range(t + a + 1, t + b + 1):
            if x[k] < m:
                m = x[k]
        out[t] = m
    return out


def _until_scan_loop(r1, r2, a, b, n_out):
    out = np.empty(n_out)
    for t in range(n_out):
        best = -np.inf
        runmin = np.inf
        for t1 in range(t, t + b + 1):
            if r1[t1] < runmin:
                runmin = r1[t1]
            if t1 >= t + a:
                cand = r2[t1]
                if runmin < cand:
                    cand = runmin
                if cand > best:
                    best = cand
        out[t] = best
    return out


def window_max_numpy(x, a, b, n_out):
    acc = x[a:a + n_out].copy()
    for k in range(a + 1, b + 1):
        np.maximum(acc, x[k:k + n_out], out=acc)
    return acc


def window_min_numpy(x, a, b, n_out):
    acc = x[a:a + n_out].copy()
    for k in range(a + 1, b + 1):
        np.minimum(acc, x[k:k + n_out], out=acc)
    return acc


def until_scan_numpy(r1, r2, a, b, n_out):
    # For each start t: max over t1 in [t+a, t+b] of
    # min(r2[t1], min(r1[t .. t1])).  runmin carries min(r1[t .. t+k]).
    runmin = r1[0:n_out].copy()
    for k in range(1, a + 1):
        np.minimum(runmin, r1[k:k + n_out], out=runmin)
    best = np.minimum(r2[a:a + n_out], runmin)
    for k in range(a + 1, b + 1):
        np.minimum(runmin, r1[k:k + n_out], out=runmin)
        np.maximum(best, np.minimum(r2[k:k + n_out], runmin), out=best)
    return best


if HAVE_NUMBA:
    window_max_jit = njit(cache=True)(_window_max_loop)
    window_min_jit = njit(cache=True)(_window_min_loop)
    until_scan_jit = njit(cache=True)(_until_scan_loop)
    window_max, window_min, until_scan = window_max_jit, window_min_jit, until_scan_jit
else:
    window_max_jit = window_min_jit = until_scan_jit = None
    window_max, window_min, until_scan = (window_max_numpy, window_min_numpy,
                                          until_scan_numpy)
