"""Canonical expanded form used for golden-file comparison.

``normalize`` expands products and nonnegative integer powers of sums into a
flat sum of monomials ``c * a1^k1 * a2^k2 ...``. Atoms are symbols, function
applications (arguments normalized recursively) and non-integer or negative
powers of multi-term sums. ``abs(u)^k`` with even ``k`` becomes ``u^k``.
Monomials are sorted by their printed form, so equal polynomials print
identically.
"""
from __future__ import annotations

from .nodes import (Add, Const, Div, Expr, Func, Mul, Neg, Pow, Sym, add,
                    const, func, mul, power)
from .printing import format_expr

__all__ = ["normalize", "poly_terms", "poly_difference"]


def _atom_key(atom):
    return format_expr(atom)


def _mono(items):
    """Canonical monomial tuple from ``{atom: exponent}``."""
    return tuple(sorted(((a, k) for a, k in items.items() if k != 0),
                        key=lambda ak: _atom_key(ak[0])))


def _poly_mul(p1, p2):
    out: dict = {}
    for m1, c1 in p1.items():
        for m2, c2 in p2.items():
            merged = dict(m1)
            for atom, k in m2:
                merged[atom] = merged.get(atom, 0.0) + k
            key = _mono(merged)
            out[key] = out.get(key, 0.0) + c1 * c2
    return {k: c for k, c in out.items() if c != 0.0}


def _poly_add(p1, p2):
    out = dict(p1)
    for m, c in p2.items():
        out[m] = out.get(m, 0.0) + c
    return {k: c for k, c in out.items() if c != 0.0}


def _atom(e):
    return {((e, 1.0),): 1.0}


def _rebuild(poly):
    terms = []
    for mono, coeff in sorted(poly.items(), key=lambda mc: _mono_key(mc[0])):
        factors = [power(a, k) for a, k in mono]
        terms.append(mul(const(coeff), *factors))
    return add(*terms) if terms else const(0.0)


def _mono_key(mono):
    return tuple((_atom_key(a), -k) for a, k in mono)


def _expand(e, memo):
    hit = memo.get(e)
    if hit is not None:
        return hit
    if isinstance(e, Const):
        out = {(): e.value} if e.value != 0.0 else {}
    elif isinstance(e, Sym):
        out = _atom(e)
    elif isinstance(e, Add):
        out = {}
        for a in e.args:
            out = _poly_add(out, _expand(a, memo))
    elif isinstance(e, Mul):
        out = {(): 1.0}
        for a in e.args:
            out = _poly_mul(out, _expand(a, memo))
    elif isinstance(e, Neg):
        out = {m: -c for m, c in _expand(e.arg, memo).items()}
    elif isinstance(e, Div):
        out = _poly_mul(_expand(e.num, memo), _expand(Pow._make(e.den, -1.0), memo))
    elif isinstance(e, Pow):
        out = _expand_pow(e, memo)
    elif isinstance(e, Func):
        out = _atom(func(e.name, normalize(e.arg)))
    else:
        raise TypeError(e)
    memo[e] = out
    return out


def _expand_pow(e, memo):
    k = e.exponent
    if isinstance(e.base, Func) and e.base.name == "abs" and k.is_integer() and k % 2 == 0:
        return _expand(Pow._make(e.base.arg, k), memo)
    base = _expand(e.base, memo)
    if k.is_integer() and k > 0:
        out = {(): 1.0}
        for _ in range(int(k)):
            out = _poly_mul(out, base)
        return out
    if len(base) == 1 and k.is_integer():
        ((mono, coeff),) = base.items()
        return {_mono({a: kk * k for a, kk in mono}): coeff ** k}
    return _atom(power(_rebuild(base), k))


def _fix_abs(poly, memo):
    """Rewrite monomials carrying ``abs(u)`` to an even power."""
    changed = True
    while changed:
        changed = False
        out: dict = {}
        for mono, coeff in poly.items():
            rest, extra = {}, {(): coeff}
            for atom, k in mono:
                if isinstance(atom, Func) and atom.name == "abs" and k.is_integer() and k % 2 == 0:
                    extra = _poly_mul(extra, _expand(Pow._make(atom.arg, k), memo))
                    changed = True
                else:
                    rest[atom] = k
            out = _poly_add(out, _poly_mul({_mono(rest): 1.0}, extra))
        poly = out
    return poly


def poly_terms(e: Expr) -> dict:
    """Expanded ``{monomial: coefficient}`` map of ``e``."""
    memo: dict = {}
    return _fix_abs(_expand(e, memo), memo)


def normalize(e: Expr) -> Expr:
    return _rebuild(poly_terms(e))


def poly_difference(a: Expr, b: Expr, rel_tol: float = 1e-12) -> list:
    """Monomials on which ``a`` and ``b`` disagree beyond ``rel_tol``.

    Returns ``(printed monomial, coeff_a, coeff_b)`` triples; empty means the
    two agree term by term after normalization.
    """
    pa, pb = poly_terms(a), poly_terms(b)
    scale = max([abs(c) for c in pa.values()] + [abs(c) for c in pb.values()] + [1.0])
    out = []
    for mono in sorted(set(pa) | set(pb), key=_mono_key):
        ca, cb = pa.get(mono, 0.0), pb.get(mono, 0.0)
        if abs(ca - cb) > rel_tol * scale:
            label = format_expr(_rebuild({mono: 1.0})) if mono else "1"
            out.append((label, ca, cb))
    return out
