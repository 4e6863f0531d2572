"""Reverse-mode autodiff over scalars, vectors and dense matrices.

A Node wraps a python float or a float64 ndarray together with the closure
that pushes its incoming gradient to its parents.  Graphs are built by the
module-level ops and differentiated by :func:`backward`, which walks the
tape in reverse topological order.  Gradient accumulation is first-assign
then in-place add, always in the fixed parent order of each op, so repeated
runs of the same graph are bitwise identical.

Extrema come in two flavors used for the two robustness regimes: hard_max
and friends take exact values and route the whole gradient to the first
extremal argument, while smooth_max/smooth_min are the log-sum-exp
softenings with scale beta, computed with max-subtraction so large beta
does not overflow.
"""

import math

import numpy as np

# Nodes refuse to hold NaN/Inf when this is set; flip off only for
# throwaway benchmarks.
CHECK_FINITE = True


class NonFiniteError(ArithmeticError):
    """A node value or gradient came out NaN or infinite."""


class Node:
    __slots__ = ("value", "op", "parents", "grad", "_backward")

    def __init__(self, value, parents=(), op="leaf", backward=None):
        if isinstance(value, np.ndarray):
            if value.dtype != np.float64:
                value = value.astype(np.float64)
            if CHECK_FINITE and not np.isfinite(value).all():
                raise NonFiniteError("non-finite value in op %r" % op)
        else:
            value = float(value)
            if CHECK_FINITE and not math.isfinite(value):
                raise NonFiniteError("non-finite value in op %r" % op)
        self.value = value
        self.op = op
        self.parents = parents
        self.grad = None
        self._backward = backward

    def __repr__(self):
        if isinstance(self.value, np.ndarray):
            return "Node(%s %s, op=%s)" % (self.value.shape, self.value.dtype, self.op)
        return "Node(%r, op=%s)" % (self.value, self.op)

    # Scalar conveniences; heavy code calls the module ops directly.
    def __add__(self, other):
        return add(self, other if isinstance(other, Node) else constant(other))

    def __mul__(self, other):
        return mul(self, other if isinstance(other, Node) else constant(other))

    def __neg__(self):
        return neg(self)

    def __sub__(self, other):
        return sub(self, other if isinstance(other, Node) else constant(other))


def leaf(value):
    """Trainable leaf; its .grad is filled by backward()."""
    if isinstance(value, (list, tuple)):
        value = np.asarray(value, dtype=np.float64)
    return Node(value)


def constant(value):
    """Leaf that is not meant to be trained (gradients still accumulate)."""
    if isinstance(value, (list, tuple)):
        value = np.asarray(value, dtype=np.float64)
    return Node(value, op="const")


def _acc(node, g):
    if node.grad is None:
        node.grad = g.copy() if isinstance(g, np.ndarray) else float(g)
    elif isinstance(node.grad, np.ndarray):
        node.grad += g
    else:
        node.grad = node.grad + g


# -- arithmetic ----------------------------------------------------------

def add(a, b):
    def bw(g):
        _acc(a, g)
        _acc(b, g)
    return Node(a.value + b.value, (a, b), "add", bw)


def sub(a, b):
    def bw(g):
        _acc(a, g)
        _acc(b, -g)
    return Node(a.value - b.value, (a, b), "sub", bw)


def mul(a, b):
    def bw(g):
        _acc(a, g * b.value)
        _acc(b, g * a.value)
    return Node(a.value * b.value, (a, b), "mul", bw)


def neg(a):
    def bw(g):
        _acc(a, -g)
    return Node(-a.value, (a,), "neg", bw)


def scale_shift(a, k, c=0.0):
    """a*k + c with constants k, c (floats or arrays broadcastable to a)."""
    def bw(g):
        _acc(a, g * k)
    return Node(a.value * k + c, (a,), "scale_shift", bw)


def _unary(name, fn, dfn):
    def op(a):
        y = fn(a.value)

        def bw(g):
            _acc(a, g * dfn(a.value, y))
        return Node(y, (a,), name, bw)
    op.__name__ = name
    return op


tanh = _unary("tanh", np.tanh, lambda x, y: 1.0 - y * y)
sin = _unary("sin", np.sin, lambda x, y: np.cos(x))
cos = _unary("cos", np.cos, lambda x, y: -np.sin(x))
exp = _unary("exp", np.exp, lambda x, y: y)


def _expit(x):
    # Stable logistic; np.exp on the non-positive branch only.
    if isinstance(x, np.ndarray):
        out = np.empty_like(x)
        pos = x >= 0
        out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
        ex = np.exp(x[~pos])
        out[~pos] = ex / (1.0 + ex)
        return out
    if x >= 0:
        return 1.0 / (1.0 + math.exp(-x))
    ex = math.exp(x)
    return ex / (1.0 + ex)


sigmoid = _unary("sigmoid", _expit, lambda x, y: y * (1.0 - y))


# -- matrix/vector structure --------------------------------------------

def matmul(a, b):
    def bw(g):
        _acc(a, g @ b.value.T)
        _acc(b, a.value.T @ g)
    return Node(a.value @ b.value, (a, b), "matmul", bw)


def add_rowvec(a, v):
    """(B, K) plus a (K,) bias node broadcast over rows."""
    def bw(g):
        _acc(a, g)
        _acc(v, g.sum(axis=0))
    return Node(a.value + v.value, (a, v), "add_rowvec", bw)


def concat_cols(nodes):
    nodes = list(nodes)
    offs = np.cumsum([0] + [n.value.shape[1] for n in nodes])

    def bw(g):
        for i, n in enumerate(nodes):
            _acc(n, g[:, offs[i]:offs[i + 1]])
    return Node(np.concatenate([n.value for n in nodes], axis=1),
                tuple(nodes), "concat_cols", bw)


def slice_cols(a, j0, j1):
    def bw(g):
        full = np.zeros_like(a.value)
        full[:, j0:j1] = g
        _acc(a, full)
    return Node(a.value[:, j0:j1].copy(), (a,), "slice_cols", bw)


def slice_rows(a, r0, r1):
    def bw(g):
        full = np.zeros_like(a.value)
        full[r0:r1] = g
        _acc(a, full)
    return Node(a.value[r0:r1].copy(), (a,), "slice_rows", bw)


def getcol(a, j):
    def bw(g):
        full = np.zeros_like(a.value)
        full[:, j] = g
        _acc(a, full)
    return Node(a.value[:, j].copy(), (a,), "getcol", bw)


def stack_cols(nodes):
    nodes = list(nodes)

    def bw(g):
        for i, n in enumerate(nodes):
            _acc(n, g[:, i])
    return Node(np.stack([n.value for n in nodes], axis=1),
                tuple(nodes), "stack_cols", bw)


def affine_rows(x, r0, r1, c, d):
    """Rows r0:r1 of (B, n) node x pushed through c . row + d -> (r1-r0,)."""
    c = np.asarray(c, dtype=np.float64)

    def bw(g):
        full = np.zeros_like(x.value)
        full[r0:r1] = np.outer(g, c)
        _acc(x, full)
    return Node(x.value[r0:r1] @ c + d, (x,), "affine_rows", bw)


def vsum(a):
    """Sum of every entry, as a scalar node."""
    def bw(g):
        _acc(a, np.full_like(a.value, g))
    return Node(float(np.sum(a.value)), (a,), "vsum", bw)


def sum_list(nodes):
    """Scalar sum of scalar nodes, accumulated left to right."""
    nodes = list(nodes)
    if not nodes:
        raise ValueError("sum_list needs at least one node")
    total = 0.0
    for n in nodes:
        total += n.value

    def bw(g):
        for n in nodes:
            _acc(n, g)
    return Node(total, tuple(nodes), "sum_list", bw)


# -- extrema -------------------------------------------------------------

def hard_max(nodes):
    """Exact max of scalar nodes; gradient goes to the first argmax."""
    nodes = list(nodes)
    if not nodes:
        raise ValueError("hard_max needs at least one argument")
    vals = np.array([n.value for n in nodes])
    i = int(np.argmax(vals))

    def bw(g):
        _acc(nodes[i], g)
    return Node(float(vals[i]), tuple(nodes), "hard_max", bw)


def hard_min(nodes):
    nodes = list(nodes)
    if not nodes:
        raise ValueError("hard_min needs at least one argument")
    vals = np.array([n.value for n in nodes])
    i = int(np.argmin(vals))

    def bw(g):
        _acc(nodes[i], g)
    return Node(float(vals[i]), tuple(nodes), "hard_min", bw)


def smooth_max(nodes, beta):
    """(1/beta) ln sum exp(beta a_i); lies in [max, max + ln(m)/beta]."""
    nodes = list(nodes)
    if not nodes:
        raise ValueError("smooth_max needs at least one argument")
    if beta <= 0:
        raise ValueError("beta must be positive")
    vals = np.array([n.value for n in nodes])
    mx = vals.max()
    w = np.exp(beta * (vals - mx))
    s = w.sum()
    out = float(mx + math.log(s) / beta)
    w /= s

    def bw(g):
        for i, n in enumerate(nodes):
            _acc(n, g * w[i])
    return Node(out, tuple(nodes), "smooth_max", bw)


def smooth_min(nodes, beta):
    """-(1/beta) ln sum exp(-beta a_i); lies in [min - ln(m)/beta, min]."""
    nodes = list(nodes)
    if not nodes:
        raise ValueError("smooth_min needs at least one argument")
    if beta <= 0:
        raise ValueError("beta must be positive")
    vals = np.array([n.value for n in nodes])
    mn = vals.min()
    w = np.exp(-beta * (vals - mn))
    s = w.sum()
    out = float(mn - math.log(s) / beta)
    w /= s

    def bw(g):
        for i, n in enumerate(nodes):
            _acc(n, g * w[i])
    return Node(out, tuple(nodes), "smooth_min", bw)


def _stackvals(nodes):
    return np.stack([n.value for n in nodes], axis=0)


def vmax_many(nodes):
    """Elementwise max across equal-shape vector nodes.

    Per element the gradient goes to the first node attaining the max,
    mirroring hard_max's tie rule.
    """
    nodes = list(nodes)
    if not nodes:
        raise ValueError("vmax_many needs at least one argument")
    arr = _stackvals(nodes)
    am = arr.argmax(axis=0)
    out = np.take_along_axis(arr, am[None, :], axis=0)[0]

    def bw(g):
        for i, n in enumerate(nodes):
            _acc(n, g * (am == i))
    return Node(out, tuple(nodes), "vmax_many", bw)


def vmin_many(nodes):
    nodes = list(nodes)
    if not nodes:
        raise ValueError("vmin_many needs at least one argument")
    arr = _stackvals(nodes)
    am = arr.argmin(axis=0)
    out = np.take_along_axis(arr, am[None, :], axis=0)[0]

    def bw(g):
        for i, n in enumerate(nodes):
            _acc(n, g * (am == i))
    return Node(out, tuple(nodes), "vmin_many", bw)


def vsmooth_max(nodes, beta):
    nodes = list(nodes)
    if not nodes:
        raise ValueError("vsmooth_max needs at least one argument")
    if beta <= 0:
        raise ValueError("beta must be positive")
    arr = _stackvals(nodes)
    mx = arr.max(axis=0)
    w = np.exp(beta * (arr - mx))
    s = w.sum(axis=0)
    out = mx + np.log(s) / beta
    w /= s

    def bw(g):
        for i, n in enumerate(nodes):
            _acc(n, g * w[i])
    return Node(out, tuple(nodes), "vsmooth_max", bw)


def vsmooth_min(nodes, beta):
    nodes = list(nodes)
    if not nodes:
        raise ValueError("vsmooth_min needs at least one argument")
    if beta <= 0:
        raise ValueError("beta must be positive")
    arr = _stackvals(nodes)
    mn = arr.min(axis=0)
    w = np.exp(-beta * (arr - mn))
    s = w.sum(axis=0)
    out = mn - np.log(s) / beta
    w /= s

    def bw(g):
        for i, n in enumerate(nodes):
            _acc(n, g * w[i])
    return Node(out, tuple(nodes), "vsmooth_min", bw)


# -- backward pass -------------------------------------------------------

def _toposort(out):
    topo = []
    seen = set()
    stack = [(out, False)]
    while stack:
        node, done = stack.pop()
        if done:
            topo.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for p in node.parents:
            if id(p) not in seen:
                stack.append((p, False))
    return topo


def backward(out):
    """Fill .grad on every ancestor of the scalar node ``out``."""
    if isinstance(out.value, np.ndarray):
        raise ValueError("backward needs a scalar output node")
    topo = _toposort(out)
    for n in topo:
        n.grad = None
    out.grad = 1.0
    for n in reversed(topo):
        if n._backward is None or n.grad is None:
            continue
        if CHECK_FINITE:
            bad = (not np.isfinite(n.grad).all()
                   if isinstance(n.grad, np.ndarray)
                   else not math.isfinite(n.grad))
            if bad:
                raise NonFiniteError("non-finite gradient at op %r" % n.op)
        n._backward(n.grad)


def grad_check(build, params, h=1e-5):
    """Max relative error between backprop and central differences.

    ``build`` reconstructs the scalar output from the current parameter
    values; entries of each parameter are perturbed in place by +-h.
    """
    out = build()
    backward(out)
    saved = []
    for p in params:
        g = p.grad
        if g is None:
            g = np.zeros_like(p.value) if isinstance(p.value, np.ndarray) else 0.0
        saved.append(np.array(g, dtype=np.float64, copy=True)
                     if isinstance(g, np.ndarray) else float(g))

    def f():
        return float(build().value)

    worst = 0.0
    for p, g in zip(params, saved):
        if isinstance(p.value, np.ndarray):
            for idx in np.ndindex(p.value.shape):
                orig = p.value[idx]
                p.value[idx] = orig + h
                hi = f()
                p.value[idx] = orig - h
                lo = f()
                p.value[idx] = orig
                fd = (hi - lo) / (2.0 * h)
                worst = max(worst, abs(g[idx] - fd) / (abs(fd) + 1e-12))
        else:
            orig = p.value
            p.value = orig + h
            hi = f()
            p.value = orig - h
            lo = f()
            p.value = orig
            fd = (hi - lo) / (2.0 * h)
            worst = max(worst, abs(g - fd) / (abs(fd) + 1e-12))
    return worst
