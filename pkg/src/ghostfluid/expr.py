"""Closed-form expressions in ``x`` with second-order forward-mode derivatives.

Grammar (whitespace ignored)::

    expr   := term (('+' | '-') term)*
    term   := unary (('*' | '/') unary)*
    unary  := ('-' | '+') unary | power
    power  := atom ('^' unary)?
    atom   := NUMBER | NAME | NAME '(' expr ')' | '(' expr ')'

``^`` binds tighter than unary minus, so ``-x^2`` is ``-(x^2)``; it groups to
the right.  Names are ``x``, ``pi``, any parameter passed to
:func:`parse_expression`, and the functions ``sin``, ``cos``, ``exp``.  An
exponent must be constant; it must also be a non-negative integer unless the
base is a positive constant.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Union

import numpy as np

__all__ = [
    "ExpressionError",
    "Jet2",
    "Const",
    "Var",
    "Neg",
    "BinOp",
    "Call",
    "Pow",
    "ExpressionTree",
    "parse_expression",
    "evaluate",
    "eval_jet",
]


class ExpressionError(ValueError):
    def __init__(self, message: str, offset: int | None = None):
        self.offset = offset
        if offset is not None:
            message = f"{message} at offset {offset}"
        super().__init__(message)


class Jet2:
    """Truncated Taylor jet ``(value, first derivative, second derivative)``.

    Components may be floats or numpy arrays of matching shape.
    """

    __slots__ = ("value", "d1", "d2")

    def __init__(self, value, d1=0.0, d2=0.0):
        self.value = value
        self.d1 = d1
        self.d2 = d2

    @classmethod
    def variable(cls, x):
        return cls(x, np.ones_like(x, dtype=float) if np.ndim(x) else 1.0, 0.0 * x)

    @staticmethod
    def _lift(other) -> "Jet2":
        return other if isinstance(other, Jet2) else Jet2(other, 0.0, 0.0)

    def __add__(self, other):
        o = self._lift(other)
        return Jet2(self.value + o.value, self.d1 + o.d1, self.d2 + o.d2)

    __radd__ = __add__

    def __neg__(self):
        return Jet2(-self.value, -self.d1, -self.d2)

    def __sub__(self, other):
        return self + (-self._lift(other))

    def __rsub__(self, other):
        return self._lift(other) - self

    def __mul__(self, other):
        o = self._lift(other)
        return Jet2(
            self.value * o.value,
            self.d1 * o.value + self.value * o.d1,
            self.d2 * o.value + 2.0 * self.d1 * o.d1 + self.value * o.d2,
        )

    __rmul__ = __mul__

    def reciprocal(self):
        v = self.value
        if np.any(v == 0):
            raise ZeroDivisionError("jet division by zero")
        return Jet2(1.0 / v, -self.d1 / v**2, 2.0 * self.d1**2 / v**3 - self.d2 / v**2)

    def __truediv__(self, other):
        return self * self._lift(other).reciprocal()

    def __rtruediv__(self, other):
        return self._lift(other) * self.reciprocal()

    def compose(self, f, df, d2f):
        """Chain rule for a scalar function with known derivatives."""
        return Jet2(f(self.value), df(self.value) * self.d1,
                    d2f(self.value) * self.d1**2 + df(self.value) * self.d2)

    def __pow__(self, n):
        if n == 0:
            return Jet2(1.0 + 0.0 * self.value, 0.0 * self.value, 0.0 * self.value)
        v = self.value
        p1 = n * v ** (n - 1)
        p2 = n * (n - 1) * v ** (n - 2) if n >= 2 else 0.0 * v
        return Jet2(v**n, p1 * self.d1, p2 * self.d1**2 + p1 * self.d2)

    def __repr__(self):
        return f"Jet2({self.value!r}, {self.d1!r}, {self.d2!r})"


def _jsin(a):
    return a.compose(np.sin, np.cos, lambda v: -np.sin(v))


def _jcos(a):
    return a.compose(np.cos, lambda v: -np.sin(v), lambda v: -np.cos(v))


def _jexp(a):
    return a.compose(np.exp, np.exp, np.exp)


_FUNCS = {
    "sin": (np.sin, _jsin),
    "cos": (np.cos, _jcos),
    "exp": (np.exp, _jexp),
}
_CONSTANTS = {"pi": math.pi}


@dataclass(frozen=True)
class Const:
    value: float


@dataclass(frozen=True)
class Var:
    pass


@dataclass(frozen=True)
class Neg:
    arg: "ExpressionTree"


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "ExpressionTree"
    right: "ExpressionTree"


@dataclass(frozen=True)
class Call:
    fn: str
    arg: "ExpressionTree"


@dataclass(frozen=True)
class Pow:
    base: "ExpressionTree"
    exponent: float


ExpressionTree = Union[Const, Var, Neg, BinOp, Call, Pow]

_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)|(?P<name>[A-Za-z_]\w*)|(?P<op>[-+*/^()]))"
)


def _tokenize(src: str):
    pos = 0
    tokens = []
    while pos < len(src):
        if src[pos:].strip() == "":
            break
        m = _TOKEN.match(src, pos)
        if m is None:
            bad = len(src) - len(src[pos:].lstrip())
            raise ExpressionError(f"unexpected character {src[bad]!r}", bad)
        kind = m.lastgroup
        start = m.start(kind)
        tokens.append((kind, m.group(kind), start))
        pos = m.end()
    tokens.append(("end", "", len(src)))
    return tokens


def _depends_on_x(node) -> bool:
    if isinstance(node, Var):
        return True
    if isinstance(node, Const):
        return False
    if isinstance(node, BinOp):
        return _depends_on_x(node.left) or _depends_on_x(node.right)
    if isinstance(node, Pow):
        return _depends_on_x(node.base)
    return _depends_on_x(node.arg)


class _Parser:
    def __init__(self, src: str, params: dict):
        self.tokens = _tokenize(src)
        self.i = 0
        self.params = params

    def peek(self):
        return self.tokens[self.i]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, value):
        tok = self.take()
        if tok[1] != value:
            what = "end of input" if tok[0] == "end" else repr(tok[1])
            raise ExpressionError(f"expected {value!r}, found {what}", tok[2])

    def parse(self):
        node = self.expr()
        tok = self.peek()
        if tok[0] != "end":
            raise ExpressionError(f"unexpected {tok[1]!r}", tok[2])
        return node

    def expr(self):
        node = self.term()
        while self.peek()[1] in ("+", "-") and self.peek()[0] == "op":
            op = self.take()[1]
            node = BinOp(op, node, self.term())
        return node

    def term(self):
        node = self.unary()
        while self.peek()[1] in ("*", "/") and self.peek()[0] == "op":
            op = self.take()[1]
            node = BinOp(op, node, self.unary())
        return node

    def unary(self):
        tok = self.peek()
        if tok[0] == "op" and tok[1] == "-":
            self.take()
            return Neg(self.unary())
        if tok[0] == "op" and tok[1] == "+":
            self.take()
            return self.unary()
        return self.power()

    def power(self):
        base = self.atom()
        tok = self.peek()
        if not (tok[0] == "op" and tok[1] == "^"):
            return base
        self.take()
        exp_node = self.unary()
        if _depends_on_x(exp_node):
            raise ExpressionError("exponent must not depend on x", tok[2])
        n = float(evaluate(exp_node, 0.0))
        if _depends_on_x(base):
            if n < 0 or n != int(n):
                raise ExpressionError(
                    "exponent on an x-dependent base must be a non-negative integer",
                    tok[2],
                )
            return Pow(base, int(n))
        b = float(evaluate(base, 0.0))
        if b <= 0 and n != int(n):
            raise ExpressionError("non-integer power of a non-positive constant", tok[2])
        if b == 0 and n < 0:
            raise ExpressionError("negative power of zero", tok[2])
        return Const(b**n)

    def atom(self):
        kind, text, pos = self.take()
        if kind == "num":
            return Const(float(text))
        if kind == "name":
            if text in _FUNCS:
                self.expect("(")
                arg = self.expr()
                self.expect(")")
                return Call(text, arg)
            if text == "x":
                return Var()
            if text in self.params:
                return Const(float(self.params[text]))
            if text in _CONSTANTS:
                return Const(_CONSTANTS[text])
            raise ExpressionError(f"unknown identifier {text!r}", pos)
        if kind == "op" and text == "(":
            node = self.expr()
            self.expect(")")
            return node
        what = "end of input" if kind == "end" else repr(text)
        raise ExpressionError(f"unexpected {what}", pos)


def parse_expression(src: str, params: dict | None = None) -> ExpressionTree:
    """Parse ``src``; names in ``params`` are substituted as constants."""
    return _Parser(src, dict(params or {})).parse()


def _eval(node, x, jets: bool):
    if isinstance(node, Const):
        return Jet2(node.value) if jets else node.value
    if isinstance(node, Var):
        return x
    if isinstance(node, Neg):
        return -_eval(node.arg, x, jets)
    if isinstance(node, BinOp):
        a = _eval(node.left, x, jets)
        b = _eval(node.right, x, jets)
        if node.op == "+":
            return a + b
        if node.op == "-":
            return a - b
        if node.op == "*":
            return a * b
        if not jets and np.any(np.asarray(b) == 0):
            raise ZeroDivisionError("division by zero in expression")
        return a / b
    if isinstance(node, Call):
        plain, jet = _FUNCS[node.fn]
        a = _eval(node.arg, x, jets)
        return jet(a) if jets else plain(a)
    if isinstance(node, Pow):
        return _eval(node.base, x, jets) ** node.exponent
    raise TypeError(f"not an expression node: {node!r}")


def evaluate(tree: ExpressionTree, x):
    """Value at ``x`` (float or array)."""
    return _eval(tree, x, jets=False)


def eval_jet(tree: ExpressionTree, x) -> Jet2:
    """Value, first and second derivative at ``x`` (float or array)."""
    out = _eval(tree, Jet2.variable(x), jets=True)
    if np.ndim(x):
        z = np.zeros(np.shape(x))
        out = Jet2(out.value + z, out.d1 + z, out.d2 + z)
    return out
