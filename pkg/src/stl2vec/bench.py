"""Timing harness for the robustness kernels.

Compares the compiled loop kernels against the numpy shifted-slice
fallbacks on random signals.  Useful for checking that the compiled
backend actually pays off on a given machine before relying on it for
long dataset runs.
"""

import time

import numpy as np

from .accel import HAVE_NUMBA, backend_name
from .logic import kernels


def _time(fn, args, reps):
    fn(*args)  # warmup (also triggers compilation for the jit path)
    t0 = time.perf_counter()
    for _ in range(reps):
        fn(*args)
    return (time.perf_counter() - t0) / reps * 1e3


def benchmark(lengths=(200, 2000, 20000), window=20, reps=20, seed=0):
    """Per-kernel timings; returns rows of
    (kernel, T, numpy ms, compiled ms or None, speedup or None)."""
    rng = np.random.default_rng(seed)
    rows = []
    pairs = [
        ("window_max", kernels.window_max_numpy, kernels.window_max_jit, 1),
        ("window_min", kernels.window_min_numpy, kernels.window_min_jit, 1),
        ("until_scan", kernels.until_scan_numpy, kernels.until_scan_jit, 2),
    ]
    for T in lengths:
        sigs = [rng.standard_normal(T + window + 1) for _ in range(2)]
        for name, np_fn, jit_fn, nsig in pairs:
            args = tuple(sigs[:nsig]) + (0, window, T)
            t_np = _time(np_fn, args, reps)
            if jit_fn is not None:
                t_jit = _time(jit_fn, args, reps)
                rows.append((name, T, t_np, t_jit, t_np / t_jit))
            else:
                rows.append((name, T, t_np, None, None))
    return rows


def render(rows):
    lines = ["backend: %s (numba %savailable)"
             % (backend_name(), "" if HAVE_NUMBA else "not "),
             "%-12s %8s %12s %12s %9s"
             % ("kernel", "T", "numpy ms", "compiled ms", "speedup")]
    for name, T, t_np, t_jit, speedup in rows:
        if t_jit is None:
            lines.append("%-12s %8d %12.4f %12s %9s" % (name, T, t_np,
                                                        "n/a", "n/a"))
        else:
            lines.append("%-12s %8d %12.4f %12.4f %8.1fx"
                         % (name, T, t_np, t_jit, speedup))
    return "\n".join(lines)


def main(lengths=(200, 2000, 20000), window=20, reps=20):
    print(render(benchmark(lengths=lengths, window=window, reps=reps)))


if __name__ == "__main__":
    main()
