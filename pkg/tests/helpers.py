"""Shared oracles and random generators for the test suite.

The robustness oracle below re-states the quantitative semantics as
plain nested loops with no sharing, memoization or vectorization, so it
is slow but independently trustworthy.
"""

import numpy as np

from stl2vec.logic.ast import (And, Eventually, Always, Interval, Not, Or,
                               Pred, TrueFormula, Until, LinearPredicate,
                               horizon)
from stl2vec.logic.semantics import TRUE_ROBUSTNESS


def rho_brute(f, x, t=0):
    x = np.asarray(x, dtype=np.float64)
    if isinstance(f, TrueFormula):
        return TRUE_ROBUSTNESS
    if isinstance(f, Pred):
        return float(np.dot(f.pred.c, x[t]) + f.pred.d)
    if isinstance(f, Not):
        return -rho_brute(f.child, x, t)
    if isinstance(f, And):
        return min(rho_brute(f.left, x, t), rho_brute(f.right, x, t))
    if isinstance(f, Or):
        return max(rho_brute(f.left, x, t), rho_brute(f.right, x, t))
    if isinstance(f, Eventually):
        return max(rho_brute(f.child, x, t1)
                   for t1 in range(t + f.window.a, t + f.window.b + 1))
    if isinstance(f, Always):
        return min(rho_brute(f.child, x, t1)
                   for t1 in range(t + f.window.a, t + f.window.b + 1))
    if isinstance(f, Until):
        best = -np.inf
        for t1 in range(t + f.window.a, t + f.window.b + 1):
            left = min(rho_brute(f.left, x, t2) for t2 in range(t, t1 + 1))
            best = max(best, min(rho_brute(f.right, x, t1), left))
        return best
    raise TypeError(type(f))


def sat_brute(f, x, t=0):
    """Boolean semantics, strict predicate threshold h > 0."""
    x = np.asarray(x, dtype=np.float64)
    if isinstance(f, TrueFormula):
        return True
    if isinstance(f, Pred):
        return float(np.dot(f.pred.c, x[t]) + f.pred.d) > 0
    if isinstance(f, Not):
        return not sat_brute(f.child, x, t)
    if isinstance(f, And):
        return sat_brute(f.left, x, t) and sat_brute(f.right, x, t)
    if isinstance(f, Or):
        return sat_brute(f.left, x, t) or sat_brute(f.right, x, t)
    if isinstance(f, Eventually):
        return any(sat_brute(f.child, x, t1)
                   for t1 in range(t + f.window.a, t + f.window.b + 1))
    if isinstance(f, Always):
        return all(sat_brute(f.child, x, t1)
                   for t1 in range(t + f.window.a, t + f.window.b + 1))
    if isinstance(f, Until):
        # left must hold through t1 inclusive, mirroring the robustness
        # recursion's inner min over [t, t1]
        for t1 in range(t + f.window.a, t + f.window.b + 1):
            if sat_brute(f.right, x, t1) and \
                    all(sat_brute(f.left, x, t2) for t2 in range(t, t1 + 1)):
                return True
        return False
    raise TypeError(type(f))


def random_pred(rng, dim):
    c = tuple(float(v) for v in rng.normal(size=dim).round(3))
    return Pred(LinearPredicate(c, round(float(rng.normal()), 3)))


def random_formula(rng, dim=2, depth=4, max_bound=4, max_horizon=10):
    """Random formula tree, operators drawn uniformly at each node.

    Redraws until the horizon fits max_horizon so every sample can be
    evaluated on a short trajectory.
    """
    while True:
        f = _random_tree(rng, dim, depth, max_bound)
        if horizon(f) <= max_horizon:
            return f


def _random_tree(rng, dim, depth, max_bound):
    if depth == 0 or rng.random() < 0.25:
        return random_pred(rng, dim)
    op = rng.integers(6)
    if op >= 3:  # temporal: random window with a <= b <= max_bound
        a = int(rng.integers(0, max_bound))
        b = int(rng.integers(a, max_bound + 1))
        w = Interval(a, b)
        if op == 3:
            return Eventually(w, _random_tree(rng, dim, depth - 1, max_bound))
        if op == 4:
            return Always(w, _random_tree(rng, dim, depth - 1, max_bound))
        return Until(w, _random_tree(rng, dim, depth - 1, max_bound),
                     _random_tree(rng, dim, depth - 1, max_bound))
    if op == 0:
        return Not(_random_tree(rng, dim, depth - 1, max_bound))
    kids = (_random_tree(rng, dim, depth - 1, max_bound),
            _random_tree(rng, dim, depth - 1, max_bound))
    return And(*kids) if op == 1 else Or(*kids)


def random_trajectory(rng, f, dim, slack=3, scale=2.0):
    """States long enough to evaluate f at time 0."""
    T = horizon(f) + int(rng.integers(0, slack + 1))
    return scale * rng.standard_normal((T + 1, dim))
