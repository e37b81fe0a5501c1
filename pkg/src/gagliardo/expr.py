"""Recursive-descent parser for test-function expressions.

Grammar (``^`` binds tighter than unary minus, which binds tighter than
``*``; ``+`` and ``-`` are left associative)::

    expr    := term (('+' | '-') term)*
    term    := unary ('*' unary)*
    unary   := '-' unary | power
    power   := atom ('^' signed_number)?
    atom    := number | 'x' | 'y' | 'dist' | 'indicator'
             | 'vn' '(' number ')' | 'bump' '(' number ',' number ',' number ')'
             | ('min' | 'max') '(' expr ',' expr ')' | '(' expr ')'
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from . import fields as F


class ExprSyntaxError(ValueError):
    """Carries the byte offset of the offending token in the UTF-8 source."""

    def __init__(self, message: str, offset: int, expected: str):
        super().__init__(f"syntax error at offset {offset}: {message}")
        self.offset = offset
        self.expected = expected


# -- AST ----------------------------------------------------------------------------


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    name: str  # x, y, dist, indicator


@dataclass(frozen=True)
class Call:
    name: str  # vn, bump, min, max
    args: tuple


@dataclass(frozen=True)
class BinOp:
    op: str  # + - *
    left: object
    right: object


@dataclass(frozen=True)
class Pow:
    base: object
    exponent: float


@dataclass(frozen=True)
class Neg:
    operand: object


# -- tokenizer ------------------------------------------------------------------------

_TOKEN = re.compile(r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)|(?P<name>[A-Za-z_]\w*)|(?P<op>[-+*^(),]))")
_NAMES = {"x", "y", "dist", "indicator", "vn", "bump", "min", "max"}


@dataclass(frozen=True)
class _Tok:
    kind: str  # num, name, op, end
    text: str
    offset: int  # byte offset


def _tokenize(src: str) -> list:
    out = []
    pos = 0
    while True:
        while pos < len(src) and src[pos].isspace():
            pos += 1
        if pos >= len(src):
            out.append(_Tok("end", "", len(src.encode())))
            return out
        m = _TOKEN.match(src, pos)
        byte = len(src[:pos].encode())
        if m is None or m.end() == pos:
            raise ExprSyntaxError(f"unexpected character {src[pos]!r}", byte, "a number, name or operator")
        kind = m.lastgroup
        start = m.start(kind)
        out.append(_Tok(kind, m.group(kind), len(src[:start].encode())))
        pos = m.end()


class _Parser:
    def __init__(self, src: str):
        self.toks = _tokenize(src)
        self.i = 0

    @property
    def tok(self) -> _Tok:
        return self.toks[self.i]

    def _fail(self, expected: str):
        t = self.tok
        found = "end of input" if t.kind == "end" else repr(t.text)
        raise ExprSyntaxError(f"expected {expected}, found {found}", t.offset, expected)

    def _eat(self, text: str):
        if self.tok.kind == "op" and self.tok.text == text:
            self.i += 1
            return
        self._fail(repr(text))

    def _number(self) -> float:
        sign = 1.0
        if self.tok.kind == "op" and self.tok.text == "-":
            self.i += 1
            sign = -1.0
        if self.tok.kind != "num":
            self._fail("a number")
        v = float(self.tok.text)
        self.i += 1
        return sign * v

    def parse(self):
        node = self.expr()
        if self.tok.kind != "end":
            self._fail("an operator or end of input")
        return node

    def expr(self):
        node = self.term()
        while self.tok.kind == "op" and self.tok.text in "+-":
            op = self.tok.text
            self.i += 1
            node = BinOp(op, node, self.term())
        return node

    def term(self):
        node = self.unary()
        while self.tok.kind == "op" and self.tok.text == "*":
            self.i += 1
            node = BinOp("*", node, self.unary())
        return node

    def unary(self):
        if self.tok.kind == "op" and self.tok.text == "-":
            self.i += 1
            return Neg(self.unary())
        return self.power()

    def power(self):
        node = self.atom()
        if self.tok.kind == "op" and self.tok.text == "^":
            self.i += 1
            node = Pow(node, self._number())
        return node

    def atom(self):
        t = self.tok
        if t.kind == "num":
            self.i += 1
            return Num(float(t.text))
        if t.kind == "op" and t.text == "(":
            self.i += 1
            node = self.expr()
            self._eat(")")
            return node
        if t.kind == "name":
            if t.text not in _NAMES:
                self._fail("x, y, dist, indicator, vn, bump, min or max")
            self.i += 1
            if t.text in ("x", "y", "dist", "indicator"):
                return Var(t.text)
            self._eat("(")
            if t.text == "vn":
                args = (self._number(),)
            elif t.text == "bump":
                a = self._number()
                self._eat(",")
                b = self._number()
                self._eat(",")
                c = self._number()
                args = (a, b, c)
            else:
                a = self.expr()
                self._eat(",")
                args = (a, self.expr())
            self._eat(")")
            return Call(t.text, args)
        self._fail("a number, name or '('")


def parse_expr(src: str):
    """Parse ``src`` into an AST; raises :class:`ExprSyntaxError`."""
    return _Parser(src).parse()


def to_field(node) -> F.ScalarField:
    """Compile an AST into an evaluable field."""
    if isinstance(node, Num):
        return F.Constant(node.value)
    if isinstance(node, Var):
        return {
            "x": F.Coordinate(0),
            "y": F.Coordinate(1),
            "dist": F.DistPower(1.0),
            "indicator": F.Indicator(),
        }[node.name]
    if isinstance(node, Neg):
        return F.Scale(-1.0, to_field(node.operand))
    if isinstance(node, Pow):
        base = node.base
        if isinstance(base, Var) and base.name == "dist":
            return F.DistPower(node.exponent)
        return F.Power(to_field(base), node.exponent)
    if isinstance(node, BinOp):
        a, b = to_field(node.left), to_field(node.right)
        if node.op == "+":
            return F.Sum(a, b)
        if node.op == "-":
            return F.Sum(a, F.Scale(-1.0, b))
        return F.Product(a, b)
    if isinstance(node, Call):
        if node.name == "vn":
            if node.args[0] <= 0:
                raise ValueError("vn(n) needs n > 0")
            return F.CutoffVn(node.args[0])
        if node.name == "bump":
            if node.args[2] <= 0:
                raise ValueError("bump radius must be positive")
            return F.Bump(*node.args)
        a, b = (to_field(arg) for arg in node.args)
        return F.Min(a, b) if node.name == "min" else F.Max(a, b)
    raise TypeError(f"not an expression node: {node!r}")


def compile_expr(src: str) -> F.ScalarField:
    return to_field(parse_expr(src))
