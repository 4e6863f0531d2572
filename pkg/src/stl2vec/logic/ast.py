"""Formula types for signal temporal logic over discrete-time trajectories.

Formulas are immutable trees built from linear predicates over the state,
boolean connectives and the bounded temporal operators F (eventually),
G (always) and U (until).  Time bounds are integer step counts, so a
formula can be evaluated on any finite trajectory that is long enough,
see :func:`horizon`.
"""

from dataclasses import dataclass, field
from functools import lru_cache


@dataclass(frozen=True)
class Interval:
    """Closed integer time window [a, b] with 0 <= a <= b."""

    a: int
    b: int

    def __post_init__(self):
        if not (isinstance(self.a, int) and isinstance(self.b, int)):
            raise TypeError("interval bounds must be integers")
        if self.a < 0:
            raise ValueError("negative interval bound: [%d, %d]" % (self.a, self.b))
        if self.a > self.b:
            raise ValueError("interval with a > b: [%d, %d]" % (self.a, self.b))


@dataclass(frozen=True)
class LinearPredicate:
    """Predicate c . x > -d, evaluated through h(x) = c . x + d.

    The robustness of the predicate at a state is just h(x); satisfaction
    is h(x) > 0.  ``label`` is cosmetic and ignored by equality so that a
    formula and its pretty-printed/reparsed twin compare equal.
    """

    c: tuple
    d: float
    label: str = field(default=None, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "c", tuple(float(v) for v in self.c))
        object.__setattr__(self, "d", float(self.d))
        if len(self.c) == 0:
            raise ValueError("predicate needs at least one coefficient")

    @property
    def dim(self):
        return len(self.c)


class Formula:
    """Base class; gives the variants `&`, `|` and `~` sugar."""

    __slots__ = ()

    def __and__(self, other):
        return And(self, other)

    def __or__(self, other):
        return Or(self, other)

    def __invert__(self):
        return Not(self)


@dataclass(frozen=True)
class TrueFormula(Formula):
    pass


@dataclass(frozen=True)
class Pred(Formula):
    pred: LinearPredicate


@dataclass(frozen=True)
class Not(Formula):
    child: Formula


@dataclass(frozen=True)
class And(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Or(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Eventually(Formula):
    window: Interval
    child: Formula


@dataclass(frozen=True)
class Always(Formula):
    window: Interval
    child: Formula


@dataclass(frozen=True)
class Until(Formula):
    window: Interval
    left: Formula
    right: Formula


TRUE = TrueFormula()


def pred(c, d, label=None):
    """Shorthand for a linear predicate formula with h(x) = c . x + d."""
    return Pred(LinearPredicate(tuple(c), d, label))


def eventually(a, b, child):
    return Eventually(Interval(a, b), child)


def always(a, b, child):
    return Always(Interval(a, b), child)


def until(a, b, left, right):
    return Until(Interval(a, b), left, right)


@lru_cache(maxsize=None)
def horizon(f):
    """Number of future steps a formula needs beyond its evaluation time.

    Predicates and True look only at the current state, negation is
    transparent, binary connectives take the max of both sides, and each
    temporal operator adds its upper bound on top of its argument(s).
    """
    if isinstance(f, (TrueFormula, Pred)):
        return 0
    if isinstance(f, Not):
        return horizon(f.child)
    if isinstance(f, (And, Or)):
        return max(horizon(f.left), horizon(f.right))
    if isinstance(f, (Eventually, Always)):
        return f.window.b + horizon(f.child)
    if isinstance(f, Until):
        return f.window.b + max(horizon(f.left), horizon(f.right))
    raise TypeError("not a formula: %r" % (f,))


def formula_dim(f):
    """Largest state dimension any predicate in the formula touches."""
    if isinstance(f, TrueFormula):
        return 0
    if isinstance(f, Pred):
        return f.pred.dim
    if isinstance(f, Not):
        return formula_dim(f.child)
    if isinstance(f, (And, Or)):
        return max(formula_dim(f.left), formula_dim(f.right))
    if isinstance(f, (Eventually, Always)):
        return formula_dim(f.child)
    if isinstance(f, Until):
        return max(formula_dim(f.left), formula_dim(f.right))
    raise TypeError("not a formula: %r" % (f,))


def rect_region(xlo, xhi, ylo, yhi, dim=2, label=None):
    """Axis-aligned rectangle membership over the first two state dims.

    Conjunction of the four face predicates, associated left to right:
    ((x >= xlo and x <= xhi) and y >= ylo) and y <= yhi.  Its robustness
    at a state is the smallest signed margin to the four faces.
    """
    if not (xlo < xhi and ylo < yhi):
        raise ValueError("empty rectangle [%g, %g] x [%g, %g]" % (xlo, xhi, ylo, yhi))
    if dim < 2:
        raise ValueError("rectangle needs at least 2 state dimensions")
    ex = [0.0] * dim
    ey = [0.0] * dim
    ex[0] = 1.0
    ey[1] = 1.0
    nex = [-v for v in ex]
    ney = [-v for v in ey]
    f = And(Pred(LinearPredicate(tuple(ex), -float(xlo), label)),
            Pred(LinearPredicate(tuple(nex), float(xhi), label)))
    f = And(f, Pred(LinearPredicate(tuple(ey), -float(ylo), label)))
    f = And(f, Pred(LinearPredicate(tuple(ney), float(yhi), label)))
    return f


def _fmt_num(v):
    """Compact float text that round-trips (drops a trailing .0 on ints)."""
    if v == int(v) and abs(v) < 1e15:
        return "%d" % int(v)
    return repr(v)


def _pred_text(p):
    terms = []
    for j, cj in enumerate(p.c):
        if cj == 0.0:
            continue
        terms.append((cj, j + 1))
    if not terms:
        terms = [(0.0, 1)]
    parts = []
    for i, (cj, j) in enumerate(terms):
        mag = _fmt_num(abs(cj)) + "*x%d" % j
        if i == 0:
            parts.append(("-" if cj < 0 else "") + mag)
        else:
            parts.append(("- " if cj < 0 else "+ ") + mag)
    return "%s >= %s" % (" ".join(parts), _fmt_num(-p.d))


def _prec(f):
    # Loosest to tightest: until < or < and < unary/atom.
    if isinstance(f, Until):
        return 0
    if isinstance(f, Or):
        return 1
    if isinstance(f, And):
        return 2
    return 3


def pretty(f):
    """Render a formula as text the parser accepts.

    Reparsing the output (with the matching state dimension) yields a
    structurally identical tree.  Predicates are normalized to the >=
    comparator, which has the same robustness as the strict form.
    """
    return _pretty(f, 0)


def _pretty(f, min_prec):
    p = _prec(f)
    if isinstance(f, TrueFormula):
        s = "true"
    elif isinstance(f, Pred):
        s = _pred_text(f.pred)
    elif isinstance(f, Not):
        s = "not " + _pretty(f.child, 3)
    elif isinstance(f, And):
        # Left-associative: the right child needs parens at equal precedence.
        s = "%s and %s" % (_pretty(f.left, 2), _pretty(f.right, 3))
    elif isinstance(f, Or):
        s = "%s or %s" % (_pretty(f.left, 1), _pretty(f.right, 2))
    elif isinstance(f, Eventually):
        s = "F[%d,%d] %s" % (f.window.a, f.window.b, _pretty(f.child, 3))
    elif isinstance(f, Always):
        s = "G[%d,%d] %s" % (f.window.a, f.window.b, _pretty(f.child, 3))
    elif isinstance(f, Until):
        # Until does not chain, so both sides must bind tighter.
        s = "%s U[%d,%d] %s" % (_pretty(f.left, 1), f.window.a, f.window.b,
                                _pretty(f.right, 1))
    else:
        raise TypeError("not a formula: %r" % (f,))
    if p < min_prec:
        return "(" + s + ")"
    return s
