"""Text form of formulas.

Grammar, loosest binding first::

    formula := until
    until   := or ( "U" "[" INT "," INT "]" or )?
    or      := and ( "or" and )*
    and     := unary ( "and" unary )*
    unary   := "not" unary | "F" "[" INT "," INT "]" unary
             | "G" "[" INT "," INT "]" unary | atom
    atom    := "true" | "(" formula ")"
             | "in" "(" NUM "," NUM "," NUM "," NUM ")" | pred
    pred    := lhs ( ">" | ">=" | "<" | "<=" ) NUM
    lhs     := term ( ("+" | "-") term )*
    term    := ["-"] ( NUM ["*"] VAR | VAR | NUM )

State variables are ``x1 .. xn``.  ``in(xlo, xhi, ylo, yhi)`` expands to the
rectangle conjunction over the first two state dimensions.  Both strict and
non-strict comparators map to the same predicate since their robustness is
identical.  Errors carry the 1-based line and column of the offending token.
"""

import re

from .ast import (Always, And, Eventually, Interval, LinearPredicate, Not,
                  Or, Pred, TrueFormula, Until, rect_region)


class ParseError(ValueError):
    def __init__(self, msg, line, col):
        super().__init__("line %d, col %d: %s" % (line, col, msg))
        self.line = line
        self.col = col


_TOKEN_RE = re.compile(r"""
    (?P<ws>[ \t\r]+)
  | (?P<nl>\n)
  | (?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<name>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<op><=|>=|<|>|\(|\)|\[|\]|,|\*|\+|-)
""", re.VERBOSE)

_KEYWORDS = {"true", "and", "or", "not", "F", "G", "U", "in"}
_VAR_RE = re.compile(r"x([0-9]+)$")


class _Tok:
    __slots__ = ("kind", "text", "line", "col")

    def __init__(self, kind, text, line, col):
        self.kind = kind
        self.text = text
        self.line = line
        self.col = col


def _tokenize(text):
    toks = []
    line, col = 1, 1
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise ParseError("unexpected character %r" % text[pos], line, col)
        kind = m.lastgroup
        tok = m.group()
        if kind == "nl":
            line += 1
            col = 1
        elif kind == "ws":
            col += len(tok)
        else:
            toks.append(_Tok(kind, tok, line, col))
            col += len(tok)
        pos = m.end()
    toks.append(_Tok("eof", "", line, col))
    return toks


class _Parser:
    def __init__(self, text, dim):
        self.toks = _tokenize(text)
        self.i = 0
        self.dim = dim
        self.max_var = 0
        self.saw_rect = False

    def peek(self):
        return self.toks[self.i]

    def next(self):
        t = self.toks[self.i]
        self.i += 1
        return t

    def fail(self, msg, tok=None):
        tok = tok or self.peek()
        raise ParseError(msg, tok.line, tok.col)

    def expect(self, kind, text=None):
        t = self.peek()
        if t.kind != kind or (text is not None and t.text != text):
            want = text if text is not None else kind
            got = t.text if t.kind != "eof" else "end of input"
            self.fail("expected %r, got %r" % (want, got))
        return self.next()

    def at_op(self, text):
        t = self.peek()
        return t.kind == "op" and t.text == text

    def at_name(self, text):
        t = self.peek()
        return t.kind == "name" and t.text == text

    # -- grammar ---------------------------------------------------------

    def formula(self):
        f = self.until()
        if self.peek().kind != "eof":
            self.fail("unexpected %r after formula" % self.peek().text)
        return f

    def until(self):
        left = self.or_chain()
        if self.at_name("U"):
            self.next()
            win = self.window()
            right = self.or_chain()
            return ("until", win, left, right)
        return left

    def or_chain(self):
        f = self.and_chain()
        while self.at_name("or"):
            self.next()
            f = ("or", f, self.and_chain())
        return f

    def and_chain(self):
        f = self.unary()
        while self.at_name("and"):
            self.next()
            f = ("and", f, self.unary())
        return f

    def unary(self):
        if self.at_name("not"):
            self.next()
            return ("not", self.unary())
        if self.at_name("F"):
            self.next()
            return ("F", self.window(), self.unary())
        if self.at_name("G"):
            self.next()
            return ("G", self.window(), self.unary())
        return self.atom()

    def window(self):
        self.expect("op", "[")
        a = self.int_bound()
        self.expect("op", ",")
        b = self.int_bound()
        close = self.expect("op", "]")
        if a > b:
            self.fail("interval with a > b: [%d, %d]" % (a, b), close)
        return Interval(a, b)

    def int_bound(self):
        t = self.peek()
        if t.kind == "op" and t.text == "-":
            self.fail("negative interval bound")
        if t.kind != "num":
            self.fail("expected integer bound, got %r" % t.text)
        if "." in t.text or "e" in t.text or "E" in t.text:
            self.fail("interval bound must be an integer, got %r" % t.text)
        self.next()
        return int(t.text)

    def atom(self):
        t = self.peek()
        if t.kind == "name":
            if t.text == "true":
                self.next()
                return ("true",)
            if t.text == "in":
                return self.rect()
            if _VAR_RE.match(t.text):
                return self.predicate()
            if t.text in _KEYWORDS:
                self.fail("unexpected %r" % t.text)
            self.fail("unknown variable name %r" % t.text)
        if t.kind == "op" and t.text == "(":
            self.next()
            f = self.until()
            self.expect("op", ")")
            return f
        if t.kind == "num" or (t.kind == "op" and t.text in "+-"):
            return self.predicate()
        got = t.text if t.kind != "eof" else "end of input"
        self.fail("expected a formula, got %r" % got)

    def rect(self):
        self.next()
        self.expect("op", "(")
        vals = [self.signed_num()]
        for _ in range(3):
            self.expect("op", ",")
            vals.append(self.signed_num())
        close = self.expect("op", ")")
        if not (vals[0] < vals[1] and vals[2] < vals[3]):
            self.fail("empty rectangle [%g, %g] x [%g, %g]" % tuple(vals), close)
        self.saw_rect = True
        return ("rect", tuple(vals))

    def signed_num(self):
        sign = 1.0
        if self.at_op("-"):
            self.next()
            sign = -1.0
        elif self.at_op("+"):
            self.next()
        t = self.peek()
        if t.kind != "num":
            self.fail("expected a number, got %r" % (t.text or "end of input"))
        self.next()
        return sign * float(t.text)

    def predicate(self):
        terms = []  # (var index or None, coefficient)
        terms.append(self.term())
        while True:
            t = self.peek()
            if t.kind == "op" and t.text in "+-":
                self.next()
                j, c = self.term(allow_sign=False)
                if t.text == "-":
                    c = -c
                terms.append((j, c))
            else:
                break
        t = self.peek()
        if not (t.kind == "op" and t.text in ("<", "<=", ">", ">=")):
            got = t.text if t.kind != "eof" else "end of input"
            self.fail("expected a comparator, got %r" % got)
        self.next()
        rhs = self.signed_num()
        coeffs = {}
        const = 0.0
        for j, c in terms:
            if j is None:
                const += c
            else:
                coeffs[j] = coeffs.get(j, 0.0) + c
        if t.text in (">", ">="):
            d = const - rhs
        else:
            coeffs = {j: -c for j, c in coeffs.items()}
            d = rhs - const
        return ("pred", coeffs, d)

    def term(self, allow_sign=True):
        sign = 1.0
        if allow_sign and self.at_op("-"):
            self.next()
            sign = -1.0
        t = self.peek()
        if t.kind == "num":
            self.next()
            coef = sign * float(t.text)
            nxt = self.peek()
            if nxt.kind == "op" and nxt.text == "*":
                self.next()
                return (self.var(), coef)
            if nxt.kind == "name" and _VAR_RE.match(nxt.text):
                return (self.var(), coef)
            return (None, coef)
        if t.kind == "name":
            return (self.var(), sign)
        self.fail("expected a term, got %r" % (t.text or "end of input"))

    def var(self):
        t = self.peek()
        m = _VAR_RE.match(t.text) if t.kind == "name" else None
        if m is None:
            got = t.text if t.kind != "eof" else "end of input"
            self.fail("expected a variable, got %r" % got)
        idx = int(m.group(1))
        if idx < 1:
            self.fail("unknown variable name %r (indices start at x1)" % t.text)
        if self.dim is not None and idx > self.dim:
            self.fail("unknown variable name %r (state dimension %d)"
                      % (t.text, self.dim))
        self.next()
        self.max_var = max(self.max_var, idx)
        return idx - 1


def _resolve(node, n):
    kind = node[0]
    if kind == "true":
        return TrueFormula()
    if kind == "pred":
        c = [0.0] * n
        for j, v in node[1].items():
            c[j] = v
        return Pred(LinearPredicate(tuple(c), node[2]))
    if kind == "rect":
        xlo, xhi, ylo, yhi = node[1]
        return rect_region(xlo, xhi, ylo, yhi, dim=n)
    if kind == "not":
        return Not(_resolve(node[1], n))
    if kind == "and":
        return And(_resolve(node[1], n), _resolve(node[2], n))
    if kind == "or":
        return Or(_resolve(node[1], n), _resolve(node[2], n))
    if kind == "F":
        return Eventually(node[1], _resolve(node[2], n))
    if kind == "G":
        return Always(node[1], _resolve(node[2], n))
    if kind == "until":
        return Until(node[1], _resolve(node[2], n), _resolve(node[3], n))
    raise AssertionError(kind)


def parse(text, dim=None):
    """Parse formula text; ``dim`` fixes the state dimension.

    Without ``dim`` the dimension is inferred as the largest variable
    index used (at least 2 when ``in(...)`` appears, at least 1 always).
    """
    p = _Parser(text, dim)
    raw = p.formula()
    if dim is not None:
        n = dim
    else:
        n = max(p.max_var, 2 if p.saw_rect else 1)
    return _resolve(raw, n)
