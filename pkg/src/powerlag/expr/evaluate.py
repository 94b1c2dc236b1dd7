"""Numeric evaluation of expression trees."""
from __future__ import annotations

import math
from typing import Mapping

from .nodes import Add, Const, Div, Expr, Func, Mul, Neg, Pow, Sym, sym

__all__ = ["EvaluationError", "UnboundSymbolError", "DomainError",
           "evaluate", "apply_function", "sgn", "make_binding"]


class EvaluationError(ArithmeticError):
    pass


class UnboundSymbolError(EvaluationError, KeyError):
    def __init__(self, symbol):
        super().__init__(f"unbound symbol {symbol.name}")
        self.symbol = symbol

    def __str__(self):
        return self.args[0]


class DomainError(EvaluationError, ValueError):
    """Raised with the offending subtree attached as ``subtree``."""

    def __init__(self, subtree, message):
        from .printing import format_expr
        super().__init__(f"{message} in {format_expr(subtree)}")
        self.subtree = subtree


def sgn(x: float) -> float:
    x = float(x)
    return float((x > 0) - (x < 0))


_MATH = {
    "sin": math.sin,
    "cos": math.cos,
    "exp": math.exp,
    "log": math.log,
    "sqrt": math.sqrt,
    "abs": abs,
    "sgn": sgn,
    "tanh": math.tanh,
    "atan": math.atan,
}


def apply_function(name: str, x: float) -> float:
    return _MATH[name](x)


def make_binding(binding: Mapping) -> dict:
    """Normalize a binding whose keys are ``Sym`` nodes or DSL names."""
    out = {}
    for key, value in binding.items():
        if isinstance(key, str):
            key = _symbol_from_name(key)
        out[key] = float(value)
    return out


def _symbol_from_name(name: str) -> Sym:
    from .parser import classify_identifier
    kind, index = classify_identifier(name)
    if kind is None:
        return sym("param", name=name)
    return sym(kind, index)


def evaluate(e: Expr, binding: Mapping) -> float:
    """Evaluate ``e`` in IEEE double precision.

    Children are evaluated left to right; sums and products accumulate in
    that order, which is also what the generated code in ``codegen`` does.
    """
    values = make_binding(binding)
    memo: dict = {}

    def walk(node):
        hit = memo.get(node)
        if hit is not None:
            return hit
        if isinstance(node, Const):
            out = node.value
        elif isinstance(node, Sym):
            try:
                out = values[node]
            except KeyError:
                raise UnboundSymbolError(node) from None
        elif isinstance(node, Add):
            out = walk(node.args[0])
            for a in node.args[1:]:
                out = out + walk(a)
        elif isinstance(node, Mul):
            out = walk(node.args[0])
            for a in node.args[1:]:
                out = out * walk(a)
        elif isinstance(node, Neg):
            out = -walk(node.arg)
        elif isinstance(node, Div):
            num, den = walk(node.num), walk(node.den)
            if den == 0.0:
                raise DomainError(node, "division by zero")
            out = num / den
        elif isinstance(node, Pow):
            base = walk(node.base)
            try:
                out = math.pow(base, node.exponent)
            except (ValueError, ZeroDivisionError):
                raise DomainError(node, f"power undefined at base {base!r}") from None
            except OverflowError:
                raise DomainError(node, "overflow") from None
        elif isinstance(node, Func):
            x = walk(node.arg)
            try:
                out = _MATH[node.name](x)
            except ValueError:
                raise DomainError(node, f"{node.name} undefined at {x!r}") from None
            except OverflowError:
                raise DomainError(node, "overflow") from None
        else:
            raise TypeError(node)
        memo[node] = out
        return out

    return walk(e)
