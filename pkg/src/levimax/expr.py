"""Closed-form expressions over the real chart coordinates ``x1 .. x{2n}``.

Grammar (whitespace-insensitive)::

    expr    := term (("+" | "-") term)*
    term    := unary (("*" | "/") unary)*
    unary   := ("+" | "-") unary | power
    power   := atom ("^" unary)?          # exponent must fold to an integer
    atom    := NUMBER | VAR | FUNC "(" expr ")" | "(" expr ")"
    VAR     := "x" DIGITS                 # 1-based, at most 2n
    FUNC    := "exp" | "log" | "sin" | "cos" | "sqrt"
    NUMBER  := DIGITS ("." DIGITS?)? (("e"|"E") ("+"|"-")? DIGITS)?

``x^-1`` parses as ``x^(-1)`` and ``-x^2`` as ``-(x^2)``.  Expressions are
immutable trees; :meth:`Expression.diff` returns a new tree (only trivial
zero/one folding is applied, nothing is simplified).
"""

from __future__ import annotations

import re
from dataclasses import dataclass

import numpy as np


class ExpressionError(ValueError):
    """Base class for parse errors."""


class ExpressionSyntaxError(ExpressionError):
    def __init__(self, message: str, position: int):
        super().__init__(f"{message} at position {position}")
        self.position = position


class UnknownIdentifierError(ExpressionError):
    pass


class VariableRangeError(ExpressionError):
    pass


class DomainError(ValueError):
    """Raised when log or sqrt receives a non-positive argument."""


class Expression:
    """Node of an expression tree; subclasses are frozen dataclasses."""

    def evaluate(self, x):
        """Evaluate at points ``x`` of shape ``(..., 2n)``."""
        raise NotImplementedError

    def diff(self, i: int) -> "Expression":
        """Partial derivative with respect to the 0-based coordinate ``i``."""
        raise NotImplementedError

    def max_index(self) -> int:
        return -1

    def substitute(self, replacements) -> "Expression":
        """Replace each variable ``x_{i+1}`` by ``replacements[i]``."""
        raise NotImplementedError

    def __call__(self, x):
        return self.evaluate(x)


@dataclass(frozen=True)
class Const(Expression):
    value: float

    def evaluate(self, x):
        x = np.asarray(x, dtype=float)
        return np.full(x.shape[:-1], self.value) if x.ndim > 1 else float(self.value)

    def diff(self, i):
        return ZERO

    def substitute(self, replacements):
        return self

    def __str__(self):
        return repr(float(self.value)) if self.value >= 0 else f"({float(self.value)!r})"


ZERO = Const(0.0)
ONE = Const(1.0)


@dataclass(frozen=True)
class Var(Expression):
    index: int  # 0-based

    def evaluate(self, x):
        return np.asarray(x, dtype=float)[..., self.index]

    def diff(self, i):
        return ONE if i == self.index else ZERO

    def max_index(self):
        return self.index

    def substitute(self, replacements):
        return replacements[self.index]

    def __str__(self):
        return f"x{self.index + 1}"


@dataclass(frozen=True)
class Neg(Expression):
    arg: Expression

    def evaluate(self, x):
        return -self.arg.evaluate(x)

    def diff(self, i):
        return neg(self.arg.diff(i))

    def max_index(self):
        return self.arg.max_index()

    def substitute(self, replacements):
        return neg(self.arg.substitute(replacements))

    def __str__(self):
        return f"(-{self.arg})"


@dataclass(frozen=True)
class Binary(Expression):
    op: str
    left: Expression
    right: Expression

    def evaluate(self, x):
        a = self.left.evaluate(x)
        b = self.right.evaluate(x)
        if self.op == "+":
            return a + b
        if self.op == "-":
            return a - b
        if self.op == "*":
            return a * b
        return a / b

    def diff(self, i):
        a, b = self.left, self.right
        da, db = a.diff(i), b.diff(i)
        if self.op == "+":
            return add(da, db)
        if self.op == "-":
            return sub(da, db)
        if self.op == "*":
            return add(mul(da, b), mul(a, db))
        # (a/b)' = a'/b - a b' / b^2
        return sub(div(da, b), div(mul(a, db), power(b, 2)))

    def max_index(self):
        return max(self.left.max_index(), self.right.max_index())

    def substitute(self, replacements):
        return _BUILD[self.op](self.left.substitute(replacements), self.right.substitute(replacements))

    def __str__(self):
        return f"({self.left} {self.op} {self.right})"


@dataclass(frozen=True)
class Power(Expression):
    base: Expression
    exponent: int

    def evaluate(self, x):
        b = self.base.evaluate(x)
        if self.exponent < 0:
            return 1.0 / b ** (-self.exponent)
        return b**self.exponent

    def diff(self, i):
        db = self.base.diff(i)
        return mul(mul(Const(float(self.exponent)), power(self.base, self.exponent - 1)), db)

    def max_index(self):
        return self.base.max_index()

    def substitute(self, replacements):
        return power(self.base.substitute(replacements), self.exponent)

    def __str__(self):
        return f"({self.base}^{self.exponent})"


def _checked_log(a):
    if np.any(np.asarray(a) <= 0):
        raise DomainError("log of non-positive argument")
    return np.log(a)


def _checked_sqrt(a):
    if np.any(np.asarray(a) <= 0):
        raise DomainError("sqrt of non-positive argument")
    return np.sqrt(a)


_FUNCS = {
    "exp": np.exp,
    "log": _checked_log,
    "sin": np.sin,
    "cos": np.cos,
    "sqrt": _checked_sqrt,
}


@dataclass(frozen=True)
class Func(Expression):
    name: str
    arg: Expression

    def evaluate(self, x):
        return _FUNCS[self.name](self.arg.evaluate(x))

    def diff(self, i):
        da = self.arg.diff(i)
        if da == ZERO:
            return ZERO
        a = self.arg
        if self.name == "exp":
            outer = self
        elif self.name == "log":
            outer = div(ONE, a)
        elif self.name == "sin":
            outer = Func("cos", a)
        elif self.name == "cos":
            outer = neg(Func("sin", a))
        else:
            outer = div(Const(0.5), self)
        return mul(outer, da)

    def max_index(self):
        return self.arg.max_index()

    def substitute(self, replacements):
        return Func(self.name, self.arg.substitute(replacements))

    def __str__(self):
        return f"{self.name}({self.arg})"


# Constructors with zero/one folding; they keep derivative trees small.


def _is_const(e, value=None):
    return isinstance(e, Const) and (value is None or e.value == value)


def add(a, b):
    if _is_const(a, 0.0):
        return b
    if _is_const(b, 0.0):
        return a
    if _is_const(a) and _is_const(b):
        return Const(a.value + b.value)
    return Binary("+", a, b)


def sub(a, b):
    if _is_const(b, 0.0):
        return a
    if _is_const(a, 0.0):
        return neg(b)
    if _is_const(a) and _is_const(b):
        return Const(a.value - b.value)
    return Binary("-", a, b)


def mul(a, b):
    if _is_const(a, 0.0) or _is_const(b, 0.0):
        return ZERO
    if _is_const(a, 1.0):
        return b
    if _is_const(b, 1.0):
        return a
    if _is_const(a) and _is_const(b):
        return Const(a.value * b.value)
    return Binary("*", a, b)


def div(a, b):
    if _is_const(a, 0.0):
        return ZERO
    if _is_const(b, 1.0):
        return a
    if _is_const(a) and _is_const(b):
        return Const(a.value / b.value)
    return Binary("/", a, b)


def neg(a):
    if _is_const(a):
        return Const(-a.value)
    if isinstance(a, Neg):
        return a.arg
    return Neg(a)


def power(a, k: int):
    if k == 0:
        return ONE
    if k == 1:
        return a
    if _is_const(a):
        return Const(float(a.value) ** k)
    return Power(a, k)


_BUILD = {"+": add, "-": sub, "*": mul, "/": div}


# Parsing

_TOKEN = re.compile(
    r"\s*(?:(?P<num>\d+(?:\.\d*)?(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z_][A-Za-z_0-9]*)|(?P<op>[-+*/^()]))"
)


def _tokenize(text):
    tokens = []
    pos = 0
    while pos < len(text):
        if text[pos:].strip() == "":
            break
        m = _TOKEN.match(text, pos)
        if m is None or m.end() == pos:
            start = pos + len(text[pos:]) - len(text[pos:].lstrip())
            raise ExpressionSyntaxError(f"unexpected character {text[start]!r}", start)
        kind = m.lastgroup
        start = m.start(kind)
        tokens.append((kind, m.group(kind), start))
        pos = m.end()
    tokens.append(("end", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text, n):
        self.tokens = _tokenize(text)
        self.i = 0
        self.n = n

    def peek(self):
        return self.tokens[self.i]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, value):
        kind, text, pos = self.take()
        if text != value:
            where = "end of input" if kind == "end" else repr(text)
            raise ExpressionSyntaxError(f"expected {value!r}, found {where}", pos)

    def parse(self):
        e = self.expr()
        kind, text, pos = self.peek()
        if kind != "end":
            raise ExpressionSyntaxError(f"unexpected token {text!r}", pos)
        return e

    def expr(self):
        e = self.term()
        while self.peek()[1] in ("+", "-") and self.peek()[0] == "op":
            op = self.take()[1]
            e = Binary(op, e, self.term())
        return e

    def term(self):
        e = self.unary()
        while self.peek()[0] == "op" and self.peek()[1] in ("*", "/"):
            op = self.take()[1]
            e = Binary(op, e, self.unary())
        return e

    def unary(self):
        kind, text, _ = self.peek()
        if kind == "op" and text in ("+", "-"):
            self.take()
            arg = self.unary()
            return Neg(arg) if text == "-" else arg
        return self.power()

    def power(self):
        base = self.atom()
        kind, text, pos = self.peek()
        if kind == "op" and text == "^":
            self.take()
            exp_pos = self.peek()[2]
            exponent = self.unary()
            value = _fold_constant(exponent)
            if value is None or value != int(value):
                raise ExpressionSyntaxError("exponent must be an integer literal", exp_pos)
            return Power(base, int(value))
        return base

    def atom(self):
        kind, text, pos = self.take()
        if kind == "num":
            return Const(float(text))
        if kind == "name":
            if text in _FUNCS:
                self.expect("(")
                arg = self.expr()
                self.expect(")")
                return Func(text, arg)
            m = re.fullmatch(r"x(\d+)", text)
            if m is None:
                raise UnknownIdentifierError(f"unknown identifier {text!r} at position {pos}")
            index = int(m.group(1))
            if not 1 <= index <= 2 * self.n:
                raise VariableRangeError(
                    f"variable index {index} out of range for n={self.n} (allowed 1..{2 * self.n})"
                )
            return Var(index - 1)
        if kind == "op" and text == "(":
            e = self.expr()
            self.expect(")")
            return e
        where = "end of input" if kind == "end" else repr(text)
        raise ExpressionSyntaxError(f"unexpected {where}", pos)


def _fold_constant(e):
    if isinstance(e, Const):
        return e.value
    if isinstance(e, Neg):
        v = _fold_constant(e.arg)
        return None if v is None else -v
    return None


def parse_expression(text: str, n: int) -> Expression:
    """Parse ``text`` into an expression over ``x1 .. x{2n}``."""
    if not isinstance(text, str) or not text.strip():
        raise ExpressionSyntaxError("empty expression", 0)
    return _Parser(text, n).parse()
