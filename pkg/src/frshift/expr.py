"""Coefficient expression language.

Expressions are functions of a single variable ``t > 0``.  They are parsed
into a small tree and evaluated in the logarithmic coordinate ``x = ln t``,
which keeps doubly exponential arguments such as ``t = exp(e**9)`` finite.
Every node evaluates to a pair ``(value, d value / dx)`` so derivatives come
out exactly (forward mode) at no extra cost.

Grammar::

    expr   := term (('+' | '-') term)*
    term   := factor (('*' | '/') factor)*
    factor := unary ('^' unary)?
    unary  := '-' unary | atom
    atom   := number | 't' | 'i' | func '(' expr ')' | '(' expr ')'
    func   := exp | ln | sin | cos | tanh | llog | sigm
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass

import numpy as np
from scipy.special import expit

__all__ = [
    "ExprSyntaxError",
    "ExprDomainError",
    "SoExpression",
    "parse_expr",
    "eval_expr",
    "deriv_eval",
]

FUNCTIONS = ("exp", "ln", "sin", "cos", "tanh", "llog", "sigm")


class ExprSyntaxError(ValueError):
    """Malformed expression text; ``offset`` is the character position."""

    def __init__(self, message, offset):
        super().__init__(f"{message} at offset {offset}")
        self.offset = offset


class ExprDomainError(ValueError):
    """Expression is outside its domain (parse time or evaluation time)."""


# --------------------------------------------------------------------------
# value ranges used for the parse-time domain analysis

@dataclass(frozen=True)
class _Range:
    lo: float
    hi: float
    pos: bool  # strictly positive everywhere
    real: bool = True

    @staticmethod
    def any(real=True):
        return _Range(-math.inf, math.inf, False, real)


def _mul_range(u, v):
    with np.errstate(invalid="ignore"):
        prods = [u.lo * v.lo, u.lo * v.hi, u.hi * v.lo, u.hi * v.hi]
    prods = [0.0 if math.isnan(q) else q for q in prods]
    return min(prods), max(prods)


# --------------------------------------------------------------------------
# tree nodes; ``ev(x)`` returns (value, derivative in x)

class _Node:
    rng: _Range

    def ev(self, x):
        raise NotImplementedError

    def denominators(self):
        return []

    def contains_imag(self):
        return False


class _Const(_Node):
    def __init__(self, value):
        self.value = value
        if isinstance(value, complex):
            self.rng = _Range.any(real=False)
        else:
            self.rng = _Range(value, value, value > 0)

    def ev(self, x):
        return np.full(np.shape(x), self.value), np.zeros(np.shape(x))

    def contains_imag(self):
        return isinstance(self.value, complex)


class _Var(_Node):
    rng = _Range(0.0, math.inf, True)

    def ev(self, x):
        with np.errstate(over="ignore"):
            v = np.exp(x)
        return v, v


def _log_of(node, x):
    """Return ``(ln v, d ln v / dx)`` for a positive-certified node."""
    if isinstance(node, _Var):
        return np.asarray(x, dtype=float), np.ones(np.shape(x))
    v, dv = node.ev(x)
    if np.iscomplexobj(v):
        if np.any(np.abs(v.imag) > 0):
            raise ExprDomainError("logarithm of a complex value")
        v, dv = v.real, np.real(dv)
    if np.any(~(v > 0)):
        raise ExprDomainError("logarithm of a non-positive value")
    return np.log(v), dv / v


class _Unary(_Node):
    def __init__(self, name, arg):
        self.name = name
        self.arg = arg
        r = arg.rng
        if name in ("ln", "llog") and not r.pos:
            raise ExprDomainError(
                f"{name} needs a positive argument; cannot certify positivity")
        if not r.real and name in ("ln", "llog"):
            raise ExprDomainError(f"{name} of a complex-valued argument")
        self.rng = self._range(name, r)

    @staticmethod
    def _range(name, r):
        if not r.real:
            return _Range.any(real=False)
        if name == "exp":
            lo = math.exp(r.lo) if r.lo < 700 else math.inf
            hi = math.exp(r.hi) if r.hi < 700 else math.inf
            return _Range(lo, hi, True)
        if name == "ln":
            lo = math.log(r.lo) if r.lo > 0 else -math.inf
            hi = math.log(r.hi) if 0 < r.hi < math.inf else math.inf
            return _Range(lo, hi, lo > 0)
        if name in ("sin", "cos"):
            return _Range(-1.0, 1.0, False)
        if name == "tanh":
            return _Range(math.tanh(r.lo), math.tanh(r.hi), r.lo > 0)
        if name == "sigm":
            return _Range(0.0, 1.0, True)
        if name == "llog":
            return _Range(0.0, math.inf, False)
        if name == "neg":
            return _Range(-r.hi, -r.lo, r.hi < 0)
        raise AssertionError(name)

    def ev(self, x):
        name = self.name
        if name == "ln":
            return _log_of(self.arg, x)
        if name == "llog":
            lv, dlv = _log_of(self.arg, x)
            a = np.abs(lv)
            da = np.sign(lv) * dlv
            b = np.log1p(a)
            db = da / (1.0 + a)
            return np.log1p(b), db / (1.0 + b)
        v, dv = self.arg.ev(x)
        if name == "neg":
            return -v, -dv
        if name == "exp":
            with np.errstate(over="ignore"):
                e = np.exp(v)
            return e, e * dv
        if name == "sin":
            return np.sin(v), np.cos(v) * dv
        if name == "cos":
            return np.cos(v), -np.sin(v) * dv
        if name == "tanh":
            th = np.tanh(v)
            return th, (1.0 - th * th) * dv
        if name == "sigm":
            if np.iscomplexobj(v):
                s = 1.0 / (1.0 + np.exp(-v))
            else:
                s = expit(v)
            return s, s * (1.0 - s) * dv
        raise AssertionError(name)

    def denominators(self):
        return self.arg.denominators()

    def contains_imag(self):
        return self.arg.contains_imag()


class _Binary(_Node):
    def __init__(self, op, left, right):
        self.op = op
        self.left = left
        self.right = right
        self.rng = self._range(op, left.rng, right.rng)

    @staticmethod
    def _range(op, u, v):
        if not (u.real and v.real):
            return _Range.any(real=False)
        if op == "+":
            lo, hi = u.lo + v.lo, u.hi + v.hi
            pos = lo > 0 or (u.pos and v.lo >= 0) or (v.pos and u.lo >= 0)
            return _Range(lo, hi, pos)
        if op == "-":
            lo, hi = u.lo - v.hi, u.hi - v.lo
            return _Range(lo, hi, lo > 0 or (u.pos and v.hi <= 0))
        if op == "*":
            lo, hi = _mul_range(u, v)
            return _Range(lo, hi, lo > 0 or (u.pos and v.pos))
        if op == "/":
            pos = u.pos and v.pos
            if v.lo > 0 or v.hi < 0:
                inv = _Range(1.0 / v.hi if v.hi else math.inf,
                             1.0 / v.lo if v.lo else math.inf, v.pos)
                lo, hi = _mul_range(u, _Range(min(inv.lo, inv.hi),
                                              max(inv.lo, inv.hi), inv.pos))
                return _Range(lo, hi, lo > 0 or pos)
            return _Range(0.0 if pos else -math.inf, math.inf, pos)
        raise AssertionError(op)

    def ev(self, x):
        a, da = self.left.ev(x)
        b, db = self.right.ev(x)
        op = self.op
        if op == "+":
            return a + b, da + db
        if op == "-":
            return a - b, da - db
        if op == "*":
            return a * b, da * b + a * db
        if np.any(b == 0):
            raise ExprDomainError("division by zero")
        return a / b, (da * b - a * db) / (b * b)

    def denominators(self):
        own = [self.right] if self.op == "/" else []
        return own + self.left.denominators() + self.right.denominators()

    def contains_imag(self):
        return self.left.contains_imag() or self.right.contains_imag()


class _Pow(_Node):
    def __init__(self, base, exponent):
        self.base = base
        self.exponent = exponent
        n = exponent.real if isinstance(exponent, complex) else exponent
        self.integer = (not isinstance(exponent, complex)
                        and float(exponent).is_integer())
        if not self.integer and not base.rng.pos:
            raise ExprDomainError(
                "non-integer power needs a positive base; cannot certify positivity")
        r = base.rng
        if isinstance(exponent, complex) or not r.real:
            self.rng = _Range.any(real=False)
        elif self.integer:
            k = int(n)
            cands = []
            for e in (r.lo, r.hi):
                try:
                    cands.append(float(e) ** k)
                except (OverflowError, ZeroDivisionError):
                    cands.append(math.inf)
            if k % 2 == 0 and r.lo < 0 < r.hi:
                cands.append(0.0)
            if k < 0 and r.lo <= 0 <= r.hi:
                cands += [-math.inf, math.inf]
            lo, hi = min(cands), max(cands)
            self.rng = _Range(lo, hi, r.pos or lo > 0)
        else:
            self.rng = _Range(0.0, math.inf, True)

    def ev(self, x):
        q = self.exponent
        if self.integer:
            v, dv = self.base.ev(x)
            k = int(q)
            if k < 0 and np.any(v == 0):
                raise ExprDomainError("zero raised to a negative power")
            if k == 0:
                return np.ones_like(v), np.zeros_like(dv)
            return v ** k, k * v ** (k - 1) * dv
        lv, dlv = _log_of(self.base, x)
        with np.errstate(over="ignore"):
            p = np.exp(q * lv)
        return p, q * p * dlv

    def denominators(self):
        return self.base.denominators()

    def contains_imag(self):
        return isinstance(self.exponent, complex) or self.base.contains_imag()


# --------------------------------------------------------------------------
# parser

_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>\*\*|[-+*/^()]))")


def _tokenize(text):
    pos = 0
    out = []
    while pos < len(text):
        while pos < len(text) and text[pos].isspace():
            pos += 1
        if pos == len(text):
            break
        m = _TOKEN.match(text, pos)
        if m is None or m.end() == pos:
            raise ExprSyntaxError(f"unexpected character {text[pos]!r}", pos)
        start = m.start(m.lastgroup)
        kind = m.lastgroup
        val = m.group(kind)
        if kind == "op" and val == "**":
            val = "^"
        out.append((kind, val, start))
        pos = m.end()
    out.append(("end", "", len(text)))
    return out


class _Parser:
    def __init__(self, text):
        self.text = text
        self.toks = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.toks[self.i]

    def take(self):
        tok = self.toks[self.i]
        self.i += 1
        return tok

    def expect(self, val):
        kind, v, off = self.take()
        if v != val or kind == "end":
            what = "end of input" if kind == "end" else repr(v)
            raise ExprSyntaxError(f"expected {val!r}, found {what}", off)

    def parse(self):
        node = self.expr()
        kind, v, off = self.peek()
        if kind != "end":
            raise ExprSyntaxError(f"unexpected token {v!r}", off)
        return node

    def expr(self):
        node = self.term()
        while self.peek()[1] in ("+", "-") and self.peek()[0] == "op":
            op = self.take()[1]
            node = _Binary(op, node, self.term())
        return node

    def term(self):
        node = self.factor()
        while self.peek()[1] in ("*", "/") and self.peek()[0] == "op":
            op = self.take()[1]
            node = _Binary(op, node, self.factor())
        return node

    def factor(self):
        base = self.unary()
        if self.peek()[1] == "^":
            _, _, off = self.take()
            exp_node = self.unary()
            value = _constant_value(exp_node)
            if value is None:
                raise ExprSyntaxError("exponent must be a numeric constant", off)
            return _Pow(base, value)
        return base

    def unary(self):
        if self.peek()[1] == "-" and self.peek()[0] == "op":
            self.take()
            arg = self.unary()
            if isinstance(arg, _Const):
                return _Const(-arg.value)
            return _Unary("neg", arg)
        return self.atom()

    def atom(self):
        kind, v, off = self.take()
        if kind == "num":
            return _Const(float(v))
        if kind == "name":
            if v == "t":
                return _Var()
            if v == "i":
                return _Const(1j)
            if v in FUNCTIONS:
                self.expect("(")
                arg = self.expr()
                self.expect(")")
                return _Unary(v, arg)
            raise ExprSyntaxError(f"unknown identifier {v!r}", off)
        if v == "(":
            node = self.expr()
            self.expect(")")
            return node
        what = "end of input" if kind == "end" else repr(v)
        raise ExprSyntaxError(f"unexpected {what}", off)


def _constant_value(node):
    if isinstance(node, _Const):
        return node.value
    if isinstance(node, _Unary) and node.name == "neg":
        inner = _constant_value(node.arg)
        return None if inner is None else -inner
    return None


# --------------------------------------------------------------------------
# public API

class SoExpression:
    """A parsed coefficient ``e(t)``.

    Attributes
    ----------
    text : str
        Source text.
    is_real : bool
        True when the expression cannot produce complex values.
    lower, upper : float
        Conservative bounds on the values (real expressions only).
    """

    def __init__(self, text, root):
        self.text = text
        self._root = root
        self.is_real = not root.contains_imag()
        self.lower = root.rng.lo
        self.upper = root.rng.hi
        self._cert = {}

    def __repr__(self):
        return f"SoExpression({self.text!r})"

    def is_constant(self):
        return isinstance(self._root, _Const)

    def eval_log(self, x):
        """Values at ``t = exp(x)``."""
        v, _ = self.eval_log_deriv(x)
        return v

    def eval_log_deriv(self, x):
        """Values and derivatives with respect to ``x = ln t``."""
        x = np.asarray(x, dtype=float)
        with np.errstate(invalid="ignore"):
            v, dv = self._root.ev(x)
        v = np.asarray(v)
        dv = np.asarray(dv)
        if self.is_real:
            v, dv = np.real(v), np.real(dv)
        if not (np.all(np.isfinite(v)) and np.all(np.isfinite(dv))):
            raise ExprDomainError(f"non-finite value of {self.text!r}")
        return v, dv

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        if np.any(~(t > 0)):
            raise ExprDomainError("t must be positive")
        return self.eval_log(np.log(t))

    def denominator_minimum(self, x):
        """Smallest ``|denominator|`` over all division nodes at ``x``."""
        x = np.asarray(x, dtype=float)
        best = math.inf
        for node in self._root.denominators():
            v, _ = node.ev(x)
            best = min(best, float(np.min(np.abs(v))))
        return best


def parse_expr(text):
    """Parse ``text`` into an :class:`SoExpression`.

    Raises
    ------
    ExprSyntaxError
        For malformed input (carries the offending offset).
    ExprDomainError
        When ``ln``, ``llog`` or a non-integer power is applied to an
        argument whose positivity cannot be established from its form.
    """
    if not isinstance(text, str):
        raise TypeError("expression text must be a string")
    return SoExpression(text, _Parser(text).parse())


def eval_expr(e, t):
    """Evaluate ``e`` at ``t`` (scalar or array, ``t > 0``)."""
    out = e(t)
    return out.item() if np.ndim(out) == 0 else out


def deriv_eval(e, t):
    """Exact derivative ``e'(t)``."""
    t = np.asarray(t, dtype=float)
    if np.any(~(t > 0)):
        raise ExprDomainError("t must be positive")
    _, dv = e.eval_log_deriv(np.log(t))
    out = dv / t
    return out.item() if np.ndim(out) == 0 else out
