"""Symbolic partial and total time derivatives, substitution."""
from __future__ import annotations

from functools import lru_cache
from typing import Mapping

from .nodes import (COORD_KINDS, Add, Const, Div, Expr, Func, Mul, Neg, ONE,
                    Pow, Sym, ZERO, add, div, func, mul, neg, power, sort_key,
                    sym)

__all__ = ["OrderOverflowError", "partial", "total_time_derivative",
           "substitute", "free_symbols", "max_order", "regularize_sgn",
           "promote"]

MAX_ORDER = 4


class OrderOverflowError(ValueError):
    pass


def free_symbols(e: Expr) -> tuple:
    return tuple(sorted(e.free, key=sort_key))


def max_order(e: Expr) -> int:
    """Highest coordinate derivative order present, -1 if none."""
    orders = [s.order for s in e.free if s.kind in COORD_KINDS]
    return max(orders, default=-1)


def _chain(name, arg):
    """Derivative of ``name(u)`` with respect to ``u``."""
    if name == "sin":
        return func("cos", arg)
    if name == "cos":
        return neg(func("sin", arg))
    if name == "exp":
        return func("exp", arg)
    if name == "log":
        return div(ONE, arg)
    if name == "sqrt":
        return mul(0.5, power(arg, -0.5))
    if name == "abs":
        return func("sgn", arg)
    if name == "sgn":
        # measure-zero convention: flat everywhere
        return ZERO
    if name == "tanh":
        return add(ONE, neg(power(func("tanh", arg), 2.0)))
    if name == "atan":
        return div(ONE, add(ONE, power(arg, 2.0)))
    raise ValueError(name)


def _derive(node, d):
    """Apply a derivation ``d`` (acting on children) through one node."""
    if isinstance(node, Add):
        return add(*(d(a) for a in node.args))
    if isinstance(node, Mul):
        terms = []
        args = node.args
        for i, a in enumerate(args):
            da = d(a)
            if da is ZERO:
                continue
            terms.append(mul(*args[:i], da, *args[i + 1:]))
        return add(*terms) if terms else ZERO
    if isinstance(node, Pow):
        db = d(node.base)
        if db is ZERO:
            return ZERO
        return mul(node.exponent, power(node.base, node.exponent - 1.0), db)
    if isinstance(node, Neg):
        return neg(d(node.arg))
    if isinstance(node, Div):
        dn, dd = d(node.num), d(node.den)
        first = div(dn, node.den) if dn is not ZERO else ZERO
        if dd is ZERO:
            return first
        return add(first, neg(div(mul(node.num, dd), power(node.den, 2.0))))
    if isinstance(node, Func):
        da = d(node.arg)
        if da is ZERO:
            return ZERO
        return mul(_chain(node.name, node.arg), da)
    raise TypeError(node)


@lru_cache(maxsize=None)
def partial(e: Expr, s: Sym) -> Expr:
    """Symbolic partial derivative of ``e`` with respect to symbol ``s``."""
    if s not in e.free:
        return ZERO
    if isinstance(e, Sym):
        return ONE
    return _derive(e, lambda child: partial(child, s))


def promote(s: Sym) -> Expr:
    """Time derivative of a single symbol."""
    if s.kind == "t":
        return ONE
    if s.kind == "param":
        return ZERO
    if s.kind in COORD_KINDS:
        order = COORD_KINDS.index(s.kind)
        if order >= MAX_ORDER:
            raise OrderOverflowError(f"d/dt of {s.name} exceeds derivative order {MAX_ORDER}")
        return sym(COORD_KINDS[order + 1], s.index)
    if s.kind == "lam":
        return sym("lamd", s.index)
    raise OrderOverflowError(f"d/dt of multiplier rate {s.name} is not representable")


@lru_cache(maxsize=None)
def total_time_derivative(e: Expr) -> Expr:
    """d/dt along a curve: every jet slot is promoted one order."""
    if not e.free:
        return ZERO
    if isinstance(e, Sym):
        return promote(e)
    return _derive(e, total_time_derivative)


def substitute(e: Expr, mapping: Mapping) -> Expr:
    """Replace symbols by expressions (or numbers) and re-simplify."""
    from .nodes import as_expr
    mapping = {k: as_expr(v) for k, v in mapping.items()}
    keys = frozenset(mapping)
    memo: dict = {}

    def walk(node):
        hit = memo.get(node)
        if hit is not None:
            return hit
        if not (node.free & keys):
            out = node
        elif isinstance(node, Sym):
            out = mapping[node]
        elif isinstance(node, Add):
            out = add(*(walk(a) for a in node.args))
        elif isinstance(node, Mul):
            out = mul(*(walk(a) for a in node.args))
        elif isinstance(node, Pow):
            out = power(walk(node.base), node.exponent)
        elif isinstance(node, Neg):
            out = neg(walk(node.arg))
        elif isinstance(node, Div):
            out = div(walk(node.num), walk(node.den))
        elif isinstance(node, Func):
            out = func(node.name, walk(node.arg))
        else:
            raise TypeError(node)
        memo[node] = out
        return out

    return walk(e)


def regularize_sgn(e: Expr, epsilon: float) -> Expr:
    """Replace every ``sgn(u)`` by ``tanh(u/epsilon)``."""
    memo: dict = {}

    def walk(node):
        hit = memo.get(node)
        if hit is not None:
            return hit
        if isinstance(node, (Const, Sym)):
            out = node
        elif isinstance(node, Func) and node.name == "sgn":
            out = func("tanh", mul(1.0 / epsilon, walk(node.arg)))
        elif isinstance(node, Add):
            out = add(*(walk(a) for a in node.args))
        elif isinstance(node, Mul):
            out = mul(*(walk(a) for a in node.args))
        elif isinstance(node, Pow):
            out = power(walk(node.base), node.exponent)
        elif isinstance(node, Neg):
            out = neg(walk(node.arg))
        elif isinstance(node, Div):
            out = div(walk(node.num), walk(node.den))
        elif isinstance(node, Func):
            out = func(node.name, walk(node.arg))
        else:
            raise TypeError(node)
        memo[node] = out
        return out

    return walk(e)
