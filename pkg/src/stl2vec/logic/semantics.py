"""Boolean satisfaction and quantitative robustness of formulas.

Works on finite discrete-time trajectories given as (T+1, n) state arrays.
Robustness follows the usual recursion: predicates score h(x_t), negation
flips sign, and/or take min/max, F/G take the max/min of the child signal
over the shifted window, and until takes the best min(right, running min
of left) over the window.  Satisfaction shares the same window scans by
running them on 0/1 indicator signals.
"""

from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .ast import (Always, And, Eventually, Formula, Not, Or, Pred,
                  TrueFormula, Until, horizon)

# Score given to the trivially true formula.  Large but finite so the
# smoothed semantics never see an inf.
TRUE_ROBUSTNESS = 1e9


class HorizonError(ValueError):
    """Trajectory too short for the formula at the requested time."""


@dataclass
class Trajectory:
    """States (T+1, n) produced by controls (T, m) from states[0]."""

    states: np.ndarray
    controls: np.ndarray = None

    def __post_init__(self):
        self.states = np.asarray(self.states, dtype=float)
        if self.states.ndim != 2:
            raise ValueError("states must be a (T+1, n) array")
        if self.controls is not None:
            self.controls = np.asarray(self.controls, dtype=float)

    @property
    def steps(self):
        return self.states.shape[0] - 1

    @property
    def dim(self):
        return self.states.shape[1]


def as_states(x):
    if isinstance(x, Trajectory):
        return x.states
    arr = np.asarray(x, dtype=float)
    if arr.ndim != 2:
        raise ValueError("expected a (T+1, n) state array")
    return arr


def _check_horizon(f, states, t):
    T = states.shape[0] - 1
    need = t + horizon(f)
    if t < 0 or need > T:
        raise HorizonError(
            "formula needs states through step %d but trajectory ends at %d"
            % (need, T))


def _signal(f, states, memo):
    key = id(f)
    hit = memo.get(key)
    if hit is not None:
        return hit
    T1 = states.shape[0]
    if isinstance(f, TrueFormula):
        out = np.full(T1, TRUE_ROBUSTNESS)
    elif isinstance(f, Pred):
        c = np.asarray(f.pred.c)
        if c.shape[0] != states.shape[1]:
            raise ValueError("predicate expects %d state dims, trajectory has %d"
                             % (c.shape[0], states.shape[1]))
        out = states @ c + f.pred.d
    elif isinstance(f, Not):
        out = -_signal(f.child, states, memo)
    elif isinstance(f, And):
        left = _signal(f.left, states, memo)
        right = _signal(f.right, states, memo)
        m = min(left.shape[0], right.shape[0])
        out = np.minimum(left[:m], right[:m])
    elif isinstance(f, Or):
        left = _signal(f.left, states, memo)
        right = _signal(f.right, states, memo)
        m = min(left.shape[0], right.shape[0])
        out = np.maximum(left[:m], right[:m])
    elif isinstance(f, Eventually):
        sub = _signal(f.child, states, memo)
        n_out = sub.shape[0] - f.window.b
        out = kernels.window_max(sub, f.window.a, f.window.b, n_out)
    elif isinstance(f, Always):
        sub = _signal(f.child, states, memo)
        n_out = sub.shape[0] - f.window.b
        out = kernels.window_min(sub, f.window.a, f.window.b, n_out)
    elif isinstance(f, Until):
        left = _signal(f.left, states, memo)
        right = _signal(f.right, states, memo)
        n_out = min(left.shape[0], right.shape[0]) - f.window.b
        out = kernels.until_scan(left, right, f.window.a, f.window.b, n_out)
    else:
        raise TypeError("not a formula: %r" % (f,))
    memo[key] = out
    return out


def robustness_signal(f, x):
    """Robustness of f at every admissible start time.

    Returns a float array of length T + 1 - horizon(f); entry t is the
    robustness of f on the trajectory at time t.
    """
    states = as_states(x)
    _check_horizon(f, states, 0)
    return _signal(f, states, {})


def robustness(f, x, t=0):
    """Quantitative score of f on trajectory x at time t."""
    states = as_states(x)
    _check_horizon(f, states, t)
    return float(_signal(f, states, {})[t])


def _bool_signal(f, states, memo):
    key = id(f)
    hit = memo.get(key)
    if hit is not None:
        return hit
    T1 = states.shape[0]
    if isinstance(f, TrueFormula):
        out = np.ones(T1)
    elif isinstance(f, Pred):
        c = np.asarray(f.pred.c)
        out = (states @ c + f.pred.d > 0.0).astype(float)
    elif isinstance(f, Not):
        out = 1.0 - _bool_signal(f.child, states, memo)
    elif isinstance(f, And):
        left = _bool_signal(f.left, states, memo)
        right = _bool_signal(f.right, states, memo)
        m = min(left.shape[0], right.shape[0])
        out = np.minimum(left[:m], right[:m])
    elif isinstance(f, Or):
        left = _bool_signal(f.left, states, memo)
        right = _bool_signal(f.right, states, memo)
        m = min(left.shape[0], right.shape[0])
        out = np.maximum(left[:m], right[:m])
    elif isinstance(f, Eventually):
        sub = _bool_signal(f.child, states, memo)
        out = kernels.window_max(sub, f.window.a, f.window.b,
                                 sub.shape[0] - f.window.b)
    elif isinstance(f, Always):
        sub = _bool_signal(f.child, states, memo)
        out = kernels.window_min(sub, f.window.a, f.window.b,
                                 sub.shape[0] - f.window.b)
    elif isinstance(f, Until):
        left = _bool_signal(f.left, states, memo)
        right = _bool_signal(f.right, states, memo)
        n_out = min(left.shape[0], right.shape[0]) - f.window.b
        out = kernels.until_scan(left, right, f.window.a, f.window.b, n_out)
    else:
        raise TypeError("not a formula: %r" % (f,))
    memo[key] = out
    return out


def satisfies(f, x, t=0):
    """Boolean satisfaction of f on trajectory x at time t.

    Predicates are strict: h(x_t) must be positive, so robustness > 0
    implies satisfaction and robustness < 0 implies violation.
    """
    states = as_states(x)
    _check_horizon(f, states, t)
    return bool(_bool_signal(f, states, {})[t] > 0.5)
