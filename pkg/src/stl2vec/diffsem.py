"""Differentiable robustness over trajectories built from graph nodes.

Takes the per-step (B, n) state nodes of a batched rollout and builds the
robustness of a formula, for a block of batch rows, as a vector node that
backpropagates into the states (and through them into controls or policy
weights).  Two modes mirror the two training regimes: "exact" uses the
subgradient extrema (value identical to the plain evaluator), "smooth"
replaces every min/max with the beta log-sum-exp softening.  In smooth
mode the until candidates flatten their running min into one smooth_min
over [right_t1, left_t, ..., left_t1] instead of nesting softenings.
"""

from . import graph
from .logic.ast import (Always, And, Eventually, Not, Or, Pred, TrueFormula,
                        Until, horizon)
from .logic.semantics import TRUE_ROBUSTNESS

import numpy as np


class _Ctx:
    def __init__(self, states, r0, r1, mode, beta):
        self.states = states
        self.r0 = r0
        self.r1 = r1
        self.rows = r1 - r0
        self.mode = mode
        self.beta = beta
        self.memo = {}

    def vmax(self, nodes):
        if self.mode == "smooth":
            return graph.vsmooth_max(nodes, self.beta)
        return graph.vmax_many(nodes)

    def vmin(self, nodes):
        if self.mode == "smooth":
            return graph.vsmooth_min(nodes, self.beta)
        return graph.vmin_many(nodes)

    def node(self, f, t):
        key = (id(f), t)
        hit = self.memo.get(key)
        if hit is not None:
            return hit
        if isinstance(f, TrueFormula):
            out = graph.constant(np.full(self.rows, TRUE_ROBUSTNESS))
        elif isinstance(f, Pred):
            out = graph.affine_rows(self.states[t], self.r0, self.r1,
                                    f.pred.c, f.pred.d)
        elif isinstance(f, Not):
            out = graph.neg(self.node(f.child, t))
        elif isinstance(f, And):
            out = self.vmin([self.node(f.left, t), self.node(f.right, t)])
        elif isinstance(f, Or):
            out = self.vmax([self.node(f.left, t), self.node(f.right, t)])
        elif isinstance(f, Eventually):
            out = self.vmax([self.node(f.child, t + k)
                             for k in range(f.window.a, f.window.b + 1)])
        elif isinstance(f, Always):
            out = self.vmin([self.node(f.child, t + k)
                             for k in range(f.window.a, f.window.b + 1)])
        elif isinstance(f, Until):
            out = self._until(f, t)
        else:
            raise TypeError("not a formula: %r" % (f,))
        self.memo[key] = out
        return out

    def _until(self, f, t):
        a, b = f.window.a, f.window.b
        cands = []
        if self.mode == "smooth":
            lefts = []
            for t1 in range(t, t + b + 1):
                lefts.append(self.node(f.left, t1))
                if t1 >= t + a:
                    cands.append(graph.vsmooth_min(
                        [self.node(f.right, t1)] + list(lefts), self.beta))
            return graph.vsmooth_max(cands, self.beta)
        runmin = None
        for t1 in range(t, t + b + 1):
            lt = self.node(f.left, t1)
            runmin = lt if runmin is None else graph.vmin_many([runmin, lt])
            if t1 >= t + a:
                cands.append(graph.vmin_many([self.node(f.right, t1), runmin]))
        return graph.vmax_many(cands)


def robustness_node(f, states, t=0, rows=None, mode="exact", beta=None):
    """Robustness of f at time t for batch rows [r0, r1) as a vector node.

    ``states`` is the rollout's list of (B, n) state nodes, one per step.
    In exact mode the node's value matches the plain evaluator entry by
    entry; smooth mode needs ``beta`` > 0.
    """
    if mode not in ("exact", "smooth"):
        raise ValueError("mode must be 'exact' or 'smooth'")
    if mode == "smooth" and (beta is None or beta <= 0):
        raise ValueError("smooth mode needs beta > 0")
    T = len(states) - 1
    if t + horizon(f) > T:
        raise ValueError("formula needs states through step %d but rollout ends at %d"
                         % (t + horizon(f), T))
    B = states[0].value.shape[0]
    if rows is None:
        rows = (0, B)
    ctx = _Ctx(states, rows[0], rows[1], mode, beta)
    return ctx.node(f, t)
