"""DSL text output. ``parse(format_expr(e))`` simplifies to ``simplify(e)``."""
from __future__ import annotations

import math

from .nodes import Add, Const, Div, Expr, Func, Mul, Neg, Pow, Sym

__all__ = ["format_expr", "format_number"]

_SUM, _PRODUCT, _UNARY, _POWER, _ATOM = 1, 2, 3, 4, 5


def format_number(value: float) -> str:
    if not math.isfinite(value):
        raise ValueError(f"cannot print non-finite constant {value!r}")
    if value.is_integer() and abs(value) < 1e16:
        return str(int(value))
    return repr(value)


def format_expr(e: Expr) -> str:
    memo: dict = {}

    def fmt(node):
        hit = memo.get(node)
        if hit is None:
            hit = memo[node] = _format(node, fmt)
        return hit

    return fmt(e)[0]


def _wrap(item, needs):
    text, _ = item
    return f"({text})" if needs else text


def _negative_term(node):
    """Return the positive counterpart of a term printed after `` - ``."""
    if isinstance(node, Const) and node.value < 0:
        return Const._make(-node.value)
    if isinstance(node, Neg):
        return node.arg
    if isinstance(node, Mul) and isinstance(node.args[0], Const) and node.args[0].value < 0:
        coeff = -node.args[0].value
        rest = node.args[1:]
        if coeff == 1.0:
            return rest[0] if len(rest) == 1 else Mul._make(*rest)
        return Mul._make(Const._make(coeff), *rest)
    return None


def _format(node, fmt):
    if isinstance(node, Const):
        text = format_number(node.value)
        return text, (_UNARY if node.value < 0 else _ATOM)
    if isinstance(node, Sym):
        return node.name, _ATOM
    if isinstance(node, Add):
        parts = [fmt(node.args[0])[0]]
        for term in node.args[1:]:
            positive = _negative_term(term)
            if positive is not None:
                item = fmt(positive)
                parts.append(" - " + _wrap(item, item[1] < _PRODUCT))
            else:
                item = fmt(term)
                parts.append(" + " + _wrap(item, item[1] <= _SUM))
        return "".join(parts), _SUM
    if isinstance(node, Mul):
        args = node.args
        lead = ""
        if isinstance(args[0], Const) and args[0].value == -1.0 and len(args) > 1:
            lead, args = "-", args[1:]
        parts = []
        for i, factor in enumerate(args):
            item = fmt(factor)
            if i == 0 and not lead:
                needs = item[1] < _PRODUCT
            elif i == 0:
                # after a bare minus only powers and atoms are safe
                needs = item[1] < _POWER
            else:
                needs = item[1] <= _UNARY
            parts.append(_wrap(item, needs))
        return lead + "*".join(parts), (_UNARY if lead else _PRODUCT)
    if isinstance(node, Div):
        num, den = fmt(node.num), fmt(node.den)
        return (_wrap(num, num[1] < _PRODUCT) + "/" + _wrap(den, den[1] <= _UNARY),
                _PRODUCT)
    if isinstance(node, Neg):
        item = fmt(node.arg)
        return "-" + _wrap(item, item[1] < _POWER), _UNARY
    if isinstance(node, Pow):
        base = fmt(node.base)
        return _wrap(base, base[1] < _ATOM) + "^" + format_number(node.exponent), _POWER
    if isinstance(node, Func):
        return f"{node.name}({fmt(node.arg)[0]})", _ATOM
    raise TypeError(node)
