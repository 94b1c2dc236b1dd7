"""Precedence-climbing parser for the expression DSL.

Grammar::

    sum     := term (('+' | '-') term)*
    term    := unary (('*' | '/') unary)*
    unary   := ('-' | '+') unary | power
    power   := primary ('^' unary)?          # right-associative, literal exponent
    primary := NUMBER | IDENT | IDENT '(' sum ')' | '(' sum ')'

Reserved identifiers are ``t``, ``q<i>``, ``qd<i>``, ``qdd<i>``, ``qddd<i>``,
``qdddd<i>``, ``lam<i>`` and ``lamd<i>``; everything else must be a declared
parameter.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field

from .nodes import (FUNCTIONS, Expr, const, param, raw_add, raw_div, raw_func,
                    raw_mul, raw_neg, raw_pow, simplify, sym)

__all__ = ["ParseError", "ParseContext", "parse", "classify_identifier",
           "is_reserved"]

_TOKEN = re.compile(r"""
    (?P<ws>[ \t\r\n]+)
  | (?P<number>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<op>[-+*/^(),])
""", re.VERBOSE)

_RESERVED = re.compile(r"^(?:(?P<coord>q(?P<d>d*))|(?P<mult>lam(?P<md>d*)))(?P<index>\d+)$")


class ParseError(ValueError):
    def __init__(self, message, line=None, column=None):
        where = f" at line {line}, column {column}" if line is not None else ""
        super().__init__(f"{message}{where}")
        self.line, self.column = line, column


@dataclass(frozen=True)
class ParseContext:
    """Resolution context: coordinate count, multiplier count, parameters.

    ``n`` or ``m`` set to ``None`` disables the corresponding bound check.
    """

    n: int | None = None
    m: int | None = 0
    params: tuple = field(default_factory=tuple)


def classify_identifier(name: str):
    """Return ``(kind, index)`` for reserved names, ``(None, None)`` otherwise.

    Raises ``ParseError`` for reserved-looking names with an unsupported
    derivative order (e.g. ``qddddd0`` or ``lamdd0``).
    """
    if name == "t":
        return "t", 0
    match = _RESERVED.match(name)
    if not match:
        return None, None
    index = int(match["index"])
    if match["coord"] is not None:
        order = len(match["d"])
        if order > 4:
            raise ParseError(f"derivative order beyond 4 in {name!r}")
        return ("q", "qd", "qdd", "qddd", "qdddd")[order], index
    order = len(match["md"])
    if order > 1:
        raise ParseError(f"multiplier derivative order beyond 1 in {name!r}")
    return ("lam", "lamd")[order], index


def is_reserved(name: str) -> bool:
    try:
        return classify_identifier(name)[0] is not None or name in FUNCTIONS
    except ParseError:
        return True


def _tokenize(text):
    tokens = []
    pos, line, line_start = 0, 1, 0
    while pos < len(text):
        match = _TOKEN.match(text, pos)
        if not match:
            raise ParseError(f"unexpected character {text[pos]!r}", line, pos - line_start + 1)
        kind = match.lastgroup
        value = match.group()
        if kind != "ws":
            tokens.append((kind, value, line, pos - line_start + 1))
        else:
            newlines = value.count("\n")
            if newlines:
                line += newlines
                line_start = pos + value.rfind("\n") + 1
        pos = match.end()
    tokens.append(("end", "", line, pos - line_start + 1))
    return tokens


class _Parser:
    def __init__(self, text, context):
        self.tokens = _tokenize(text)
        self.pos = 0
        self.context = context
        self.params = set(context.params)

    def peek(self):
        return self.tokens[self.pos]

    def take(self):
        token = self.tokens[self.pos]
        self.pos += 1
        return token

    def error(self, message, token=None):
        token = token or self.peek()
        return ParseError(message, token[2], token[3])

    def expect(self, value):
        token = self.take()
        if token[1] != value:
            found = "end of input" if token[0] == "end" else repr(token[1])
            raise self.error(f"expected {value!r}, found {found}", token)

    def parse(self):
        if self.peek()[0] == "end":
            raise self.error("empty expression")
        e = self.sum()
        if self.peek()[0] != "end":
            raise self.error(f"unexpected token {self.peek()[1]!r}")
        return e

    def sum(self):
        terms = [self.term()]
        while self.peek()[1] in ("+", "-"):
            op = self.take()[1]
            right = self.term()
            terms.append(right if op == "+" else raw_neg(right))
        return terms[0] if len(terms) == 1 else raw_add(*terms)

    def term(self):
        factors = [self.unary()]
        while self.peek()[1] in ("*", "/"):
            op = self.take()[1]
            right = self.unary()
            if op == "*":
                factors.append(right)
            else:
                left = factors[0] if len(factors) == 1 else raw_mul(*factors)
                factors = [raw_div(left, right)]
        return factors[0] if len(factors) == 1 else raw_mul(*factors)

    def unary(self):
        if self.peek()[1] == "-":
            self.take()
            return raw_neg(self.unary())
        if self.peek()[1] == "+":
            self.take()
            return self.unary()
        return self.power()

    def power(self):
        base = self.primary()
        if self.peek()[1] == "^":
            token = self.take()
            exponent = self.unary()
            if exponent.free:
                raise self.error("exponent must be a real literal", token)
            from .evaluate import evaluate
            return raw_pow(base, evaluate(exponent, {}))
        return base

    def primary(self):
        token = self.take()
        kind, value = token[0], token[1]
        if kind == "number":
            return const(float(value))
        if kind == "ident":
            if self.peek()[1] == "(":
                if value not in FUNCTIONS:
                    raise self.error(f"unknown function {value!r}", token)
                self.take()
                arg = self.sum()
                self.expect(")")
                return raw_func(value, arg)
            return self.identifier(token)
        if value == "(":
            inner = self.sum()
            self.expect(")")
            return inner
        if kind == "end":
            raise self.error("unexpected end of input", token)
        raise self.error(f"unexpected token {value!r}", token)

    def identifier(self, token):
        name = token[1]
        try:
            kind, index = classify_identifier(name)
        except ParseError as exc:
            raise self.error(str(exc), token) from None
        if kind is None:
            if name in FUNCTIONS:
                raise self.error(f"function {name!r} used without argument", token)
            if name not in self.params:
                raise self.error(f"unknown identifier {name!r}", token)
            return param(name)
        limit = self.context.n if kind.startswith("q") else self.context.m
        if kind != "t" and limit is not None and index >= limit:
            raise self.error(f"index of {name!r} out of range (limit {limit})", token)
        return sym(kind, index)


def parse(text: str, context: ParseContext | None = None, *, raw: bool = False) -> Expr:
    """Parse DSL ``text``; the result is simplified unless ``raw`` is set."""
    e = _Parser(text, context or ParseContext()).parse()
    return e if raw else simplify(e)
