"""Compile expression DAGs to straight-line Python functions.

Shared subtrees are computed once. Arithmetic is emitted in the same order as
``evaluate`` walks the tree, so both paths give bit-identical results.
"""
from __future__ import annotations

import math
from typing import Callable, Sequence

from .evaluate import DomainError, _MATH, evaluate
from .nodes import Add, Const, Div, Expr, Func, Mul, Neg, Pow, Sym

__all__ = ["lambdify"]

_GLOBALS = {f"_{name}": fn for name, fn in _MATH.items()}
_GLOBALS["_pow"] = math.pow
_GLOBALS["_inf"] = math.inf


def _literal(value: float) -> str:
    if math.isfinite(value):
        return repr(value)
    if math.isnan(value):
        return "(_inf - _inf)"
    return "_inf" if value > 0 else "(-_inf)"


def _postorder(roots):
    seen = set()
    order = []
    for root in roots:
        if root in seen:
            continue
        stack = [(root, False)]
        while stack:
            node, expanded = stack.pop()
            if expanded:
                order.append(node)
                continue
            if node in seen:
                continue
            seen.add(node)
            stack.append((node, True))
            for child in reversed(node.children):
                if child not in seen:
                    stack.append((child, False))
    return order


def lambdify(exprs: Sequence[Expr], symbols: Sequence[Sym]) -> Callable:
    """Return ``f(values) -> tuple`` evaluating ``exprs`` at ``values``.

    ``values`` is indexed like ``symbols``. Symbols not in ``symbols`` raise
    ``KeyError`` at build time. Domain failures re-run the slow evaluator to
    report the offending subtree as a ``DomainError``.
    """
    exprs = list(exprs)
    position = {s: i for i, s in enumerate(symbols)}
    names: dict = {}
    lines = []
    counter = 0

    for node in _postorder(exprs):
        if isinstance(node, Const):
            names[node] = _literal(node.value)
            continue
        if isinstance(node, Sym):
            if node not in position:
                raise KeyError(f"symbol {node.name} missing from argument layout")
            name = f"s{position[node]}"
            lines.append(f"    {name} = v[{position[node]}]")
            names[node] = name
            continue
        if isinstance(node, Add):
            rhs = " + ".join(names[a] for a in node.args)
        elif isinstance(node, Mul):
            rhs = " * ".join(names[a] for a in node.args)
        elif isinstance(node, Neg):
            rhs = f"-{names[node.arg]}"
        elif isinstance(node, Div):
            rhs = f"{names[node.num]} / {names[node.den]}"
        elif isinstance(node, Pow):
            rhs = f"_pow({names[node.base]}, {node.exponent!r})"
        elif isinstance(node, Func):
            rhs = f"_{node.name}({names[node.arg]})"
        else:
            raise TypeError(node)
        name = f"c{counter}"
        counter += 1
        lines.append(f"    {name} = {rhs}")
        names[node] = name

    outputs = ", ".join(names[e] for e in exprs)
    source = "def _generated(v):\n" + "\n".join(lines) + f"\n    return ({outputs}{',' if len(exprs) == 1 else ''})\n"
    namespace = dict(_GLOBALS)
    exec(compile(source, "<powerlag-codegen>", "exec"), namespace)
    fast = namespace["_generated"]
    layout = list(symbols)

    def call(values):
        try:
            return fast(values)
        except (ValueError, ZeroDivisionError, OverflowError):
            binding = dict(zip(layout, values))
            for e in exprs:
                evaluate(e, binding)
            raise DomainError(exprs[0], "numeric failure") from None

    call.source = source
    return call
