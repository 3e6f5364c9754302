"""Metric-component expression language.

Grammar (lowest to highest binding)::

    expr    := term (("+" | "-") term)*
    term    := unary (("*" | "/") unary)*
    unary   := "-" unary | power
    power   := primary ("^" exponent)?
    exponent:= ["-"] INTEGER ("^" exponent)?
    primary := NUMBER | IDENT | FUNC "(" expr ")" | "(" expr ")"

Exponents are integer literals; a chain ``a^2^3`` folds right-to-left into a
single integer exponent.  There is no implicit multiplication.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Mapping, Union

from .errors import ArgumentError, DomainError, ParseError
from .jets import ELEMENTARY, Jet3, jet_elementary

FUNCTIONS = frozenset(ELEMENTARY)


@dataclass(frozen=True)
class Num:
    value: float
    span: tuple[int, int] = field(default=(0, 0), compare=False, repr=False)


@dataclass(frozen=True)
class Var:
    name: str
    span: tuple[int, int] = field(default=(0, 0), compare=False, repr=False)


@dataclass(frozen=True)
class Neg:
    arg: "Expr"
    span: tuple[int, int] = field(default=(0, 0), compare=False, repr=False)


@dataclass(frozen=True)
class Bin:
    op: str
    left: "Expr"
    right: "Expr"
    span: tuple[int, int] = field(default=(0, 0), compare=False, repr=False)


@dataclass(frozen=True)
class Pow:
    base: "Expr"
    exp: int
    span: tuple[int, int] = field(default=(0, 0), compare=False, repr=False)


@dataclass(frozen=True)
class Call:
    fn: str
    arg: "Expr"
    span: tuple[int, int] = field(default=(0, 0), compare=False, repr=False)


Expr = Union[Num, Var, Neg, Bin, Pow, Call]

_TOKEN = re.compile(r"""
    (?P<ws>\s+)
  | (?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<op>[-+*/^()])
""", re.VERBOSE)


@dataclass(frozen=True)
class _Tok:
    kind: str       # num | ident | op | end
    text: str
    start: int      # character offset
    end: int


def _byte_offset(source: str, char_pos: int) -> int:
    return len(source[:char_pos].encode("utf-8"))


def tokenize(source: str) -> list[_Tok]:
    toks: list[_Tok] = []
    pos = 0
    while pos < len(source):
        m = _TOKEN.match(source, pos)
        if m is None:
            raise ParseError(f"unexpected character {source[pos]!r}", _byte_offset(source, pos))
        kind = m.lastgroup
        if kind != "ws":
            toks.append(_Tok(kind, m.group(), m.start(), m.end()))
        pos = m.end()
    toks.append(_Tok("end", "", len(source), len(source)))
    return toks


class _Parser:
    def __init__(self, source: str, symbols: frozenset[str]):
        self.source = source
        self.symbols = symbols
        self.toks = tokenize(source)
        self.i = 0

    def error(self, message: str, tok: _Tok | None = None) -> ParseError:
        tok = tok or self.toks[self.i]
        return ParseError(message, _byte_offset(self.source, tok.start))

    @property
    def tok(self) -> _Tok:
        return self.toks[self.i]

    def take(self) -> _Tok:
        t = self.toks[self.i]
        self.i += 1
        return t

    def at_op(self, *ops: str) -> bool:
        return self.tok.kind == "op" and self.tok.text in ops

    def parse(self) -> Expr:
        if self.tok.kind == "end":
            raise self.error("empty expression")
        e = self.expr()
        if self.tok.kind != "end":
            if self.at_op(")"):
                raise self.error("unbalanced parenthesis")
            raise self.error(f"unexpected token {self.tok.text!r}")
        return e

    def expr(self) -> Expr:
        left = self.term()
        while self.at_op("+", "-"):
            op = self.take().text
            right = self.term()
            left = Bin(op, left, right, (left.span[0], right.span[1]))
        return left

    def term(self) -> Expr:
        left = self.unary()
        while self.at_op("*", "/"):
            op = self.take().text
            right = self.unary()
            left = Bin(op, left, right, (left.span[0], right.span[1]))
        return left

    def unary(self) -> Expr:
        if self.at_op("-"):
            t = self.take()
            arg = self.unary()
            return Neg(arg, (t.start, arg.span[1]))
        return self.power()

    def power(self) -> Expr:
        base = self.primary()
        if self.at_op("^"):
            self.take()
            exp, end = self.exponent()
            return Pow(base, exp, (base.span[0], end))
        return base

    def exponent(self) -> tuple[int, int]:
        sign = 1
        first = self.tok
        if self.at_op("-"):
            self.take()
            sign = -1
        t = self.tok
        if t.kind != "num" or not t.text.isdigit():
            raise self.error("exponent must be an integer literal", first)
        self.take()
        value = sign * int(t.text)
        end = t.end
        if self.at_op("^"):
            self.take()
            inner, end = self.exponent()
            if inner < 0 and abs(value) != 1:
                raise self.error("non-integer exponent", first)
            if abs(value) > 1 and inner * abs(value).bit_length() > 17:
                raise self.error("exponent too large", first)
            value = value ** abs(inner)
        if abs(value) > 2**16:
            raise self.error("exponent too large", first)
        return value, end

    def primary(self) -> Expr:
        t = self.tok
        if t.kind == "num":
            self.take()
            return Num(float(t.text), (t.start, t.end))
        if t.kind == "ident":
            self.take()
            if t.text in FUNCTIONS:
                if not self.at_op("("):
                    raise self.error(f"function {t.text!r} needs a parenthesized argument")
                self.take()
                arg = self.expr()
                if not self.at_op(")"):
                    raise self.error("unbalanced parenthesis")
                close = self.take()
                return Call(t.text, arg, (t.start, close.end))
            if t.text not in self.symbols:
                raise self.error(f"unknown identifier {t.text!r}", t)
            return Var(t.text, (t.start, t.end))
        if self.at_op("("):
            self.take()
            inner = self.expr()
            if not self.at_op(")"):
                raise self.error("unbalanced parenthesis")
            self.take()
            return inner
        if t.kind == "end":
            raise self.error("unexpected end of expression")
        raise self.error(f"unexpected token {t.text!r}")


def parse_expr(source: str, symbols) -> Expr:
    """Parse ``source`` allowing only the identifiers in ``symbols``."""
    if not isinstance(source, str):
        raise ParseError("expression source must be a string", 0)
    if not source.strip():
        raise ParseError("empty expression", 0)
    parser = _Parser(source, frozenset(symbols))
    try:
        return parser.parse()
    except RecursionError:
        raise ParseError("expression nested too deeply", 0) from None


# printing ------------------------------------------------------------------

_PREC = {"+": 1, "-": 1, "*": 2, "/": 2}


def _prec(e: Expr) -> int:
    if isinstance(e, Bin):
        return _PREC[e.op]
    if isinstance(e, Neg):
        return 3
    if isinstance(e, Pow):
        return 4
    return 5


def to_source(e: Expr) -> str:
    """Render an expression so that re-parsing yields the same tree."""
    if isinstance(e, Num):
        text = repr(float(e.value))
        return f"({text})" if e.value < 0 else text
    if isinstance(e, Var):
        return e.name
    if isinstance(e, Call):
        return f"{e.fn}({to_source(e.arg)})"
    if isinstance(e, Neg):
        inner = to_source(e.arg)
        return f"-({inner})" if _prec(e.arg) < 3 else f"-{inner}"
    if isinstance(e, Pow):
        base = to_source(e.base)
        if _prec(e.base) < 5:
            base = f"({base})"
        return f"{base}^{e.exp}"
    p = _PREC[e.op]
    left = to_source(e.left)
    right = to_source(e.right)
    if _prec(e.left) < p:
        left = f"({left})"
    if _prec(e.right) <= p:
        right = f"({right})"
    return f"{left} {e.op} {right}"


def free_symbols(e: Expr) -> set[str]:
    if isinstance(e, Var):
        return {e.name}
    if isinstance(e, Num):
        return set()
    if isinstance(e, (Neg, Call)):
        return free_symbols(e.arg)
    if isinstance(e, Pow):
        return free_symbols(e.base)
    return free_symbols(e.left) | free_symbols(e.right)


def rename(e: Expr, mapping: Mapping[str, str]) -> Expr:
    if isinstance(e, Var):
        return Var(mapping.get(e.name, e.name), e.span)
    if isinstance(e, Num):
        return e
    if isinstance(e, Neg):
        return Neg(rename(e.arg, mapping), e.span)
    if isinstance(e, Call):
        return Call(e.fn, rename(e.arg, mapping), e.span)
    if isinstance(e, Pow):
        return Pow(rename(e.base, mapping), e.exp, e.span)
    return Bin(e.op, rename(e.left, mapping), rename(e.right, mapping), e.span)


def is_zero(e: Expr) -> bool:
    return isinstance(e, Num) and e.value == 0.0


# evaluation ------------------------------------------------------------------

def eval_expr(e: Expr, env: Mapping[str, Jet3]) -> Jet3:
    """Evaluate ``e`` over jets bound in ``env`` (all of one dimension)."""
    if not env:
        raise ArgumentError("evaluation environment is empty")
    dim = next(iter(env.values())).dim
    return _eval(e, env, dim)


def _eval(e: Expr, env: Mapping[str, Jet3], dim: int) -> Jet3:
    try:
        if isinstance(e, Num):
            return Jet3.constant(e.value, dim)
        if isinstance(e, Var):
            try:
                return env[e.name]
            except KeyError:
                raise ArgumentError(f"identifier {e.name!r} is not bound") from None
        if isinstance(e, Neg):
            return -_eval(e.arg, env, dim)
        if isinstance(e, Pow):
            return _eval(e.base, env, dim) ** e.exp
        if isinstance(e, Call):
            return jet_elementary(e.fn, _eval(e.arg, env, dim))
        left = _eval(e.left, env, dim)
        right = _eval(e.right, env, dim)
        if e.op == "+":
            return left + right
        if e.op == "-":
            return left - right
        if e.op == "*":
            return left * right
        return left / right
    except DomainError as err:
        if err.span is None:
            raise err.with_context(span=e.span) from None
        raise
