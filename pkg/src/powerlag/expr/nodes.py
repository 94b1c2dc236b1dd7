"""Immutable expression nodes.

Nodes are hash-consed: building the same structure twice returns the same
object, so structural equality is identity and ``==``/``hash`` are O(1).
The public constructors (``add``, ``mul``, ...) simplify as they build; the
``raw_*`` constructors keep the tree exactly as given (used by the parser and
by tests that need unsimplified input).
"""
from __future__ import annotations

import math
import numbers

__all__ = [
    "Expr", "Const", "Sym", "Add", "Mul", "Pow", "Neg", "Div", "Func",
    "FUNCTIONS", "COORD_KINDS", "MULT_KINDS",
    "const", "sym", "t", "q", "qd", "qdd", "qddd", "qdddd", "lam", "lamd",
    "param", "add", "mul", "sub", "neg", "div", "power", "func",
    "raw_add", "raw_mul", "raw_pow", "raw_neg", "raw_div", "raw_func",
    "ZERO", "ONE", "as_expr", "simplify", "sort_key",
]

FUNCTIONS = ("sin", "cos", "exp", "log", "sqrt", "abs", "sgn", "tanh", "atan")

# coordinate jet kinds by derivative order, then multiplier kinds
COORD_KINDS = ("q", "qd", "qdd", "qddd", "qdddd")
MULT_KINDS = ("lam", "lamd")
_KIND_RANK = {"t": 0, **{k: 1 + i for i, k in enumerate(COORD_KINDS)},
              "lam": 6, "lamd": 7, "param": 8}

_table: dict = {}


def _intern(key, factory):
    node = _table.get(key)
    if node is None:
        node = _table.setdefault(key, factory())
    return node


class Expr:
    """Base class of all expression nodes."""

    __slots__ = ("free", "_size")

    # arithmetic sugar builds simplified trees
    def __add__(self, other):
        return add(self, as_expr(other))

    def __radd__(self, other):
        return add(as_expr(other), self)

    def __sub__(self, other):
        return sub(self, as_expr(other))

    def __rsub__(self, other):
        return sub(as_expr(other), self)

    def __mul__(self, other):
        return mul(self, as_expr(other))

    def __rmul__(self, other):
        return mul(as_expr(other), self)

    def __truediv__(self, other):
        return div(self, as_expr(other))

    def __rtruediv__(self, other):
        return div(as_expr(other), self)

    def __pow__(self, exponent):
        if isinstance(exponent, Const):
            exponent = exponent.value
        if not isinstance(exponent, numbers.Real):
            raise TypeError("exponent must be a real literal")
        return power(self, float(exponent))

    def __neg__(self):
        return neg(self)

    def __pos__(self):
        return self

    @property
    def children(self) -> tuple:
        return ()

    def __str__(self):
        from .printing import format_expr
        return format_expr(self)

    def __reduce__(self):
        # rebuild through the interning constructors
        return (_rebuild, (type(self).__name__, self._state()))


def _rebuild(name, state):
    cls = {c.__name__: c for c in (Const, Sym, Add, Mul, Pow, Neg, Div, Func)}[name]
    return cls._make(*state)


class Const(Expr):
    __slots__ = ("value",)

    @classmethod
    def _make(cls, value):
        value = float(value) + 0.0  # folds -0.0 into 0.0

        def factory():
            node = object.__new__(cls)
            node.value = value
            node.free = frozenset()
            node._size = 1
            return node
        if math.isnan(value):
            return factory()
        return _intern((cls, value), factory)

    def _state(self):
        return (self.value,)

    def __repr__(self):
        return f"Const({self.value!r})"


class Sym(Expr):
    """A jet, multiplier, time or parameter symbol.

    ``kind`` is one of ``t``, ``q``, ``qd``, ``qdd``, ``qddd``, ``qdddd``,
    ``lam``, ``lamd`` or ``param``. ``name`` is the DSL spelling.
    """

    __slots__ = ("kind", "index", "name")

    @classmethod
    def _make(cls, kind, index=0, name=None):
        if kind not in _KIND_RANK:
            raise ValueError(f"unknown symbol kind {kind!r}")
        if kind == "param":
            if not name:
                raise ValueError("parameter symbols need a name")
            index = 0
        elif kind == "t":
            index, name = 0, "t"
        else:
            index = int(index)
            if index < 0:
                raise ValueError("symbol index must be nonnegative")
            name = f"{kind}{index}"

        def factory():
            node = object.__new__(cls)
            node.kind, node.index, node.name = kind, index, name
            node.free = frozenset((node,))
            node._size = 1
            return node
        return _intern((cls, kind, index, name), factory)

    def _state(self):
        return (self.kind, self.index, self.name)

    @property
    def order(self) -> int | None:
        """Derivative order for coordinate and multiplier kinds."""
        if self.kind in COORD_KINDS:
            return COORD_KINDS.index(self.kind)
        if self.kind in MULT_KINDS:
            return MULT_KINDS.index(self.kind)
        return None

    def __repr__(self):
        return f"Sym({self.name})"


class _Nary(Expr):
    __slots__ = ("args",)

    @classmethod
    def _make(cls, *args):
        if not args:
            raise ValueError(f"{cls.__name__} needs at least one operand")

        def factory():
            node = object.__new__(cls)
            node.args = args
            node.free = frozenset().union(*(a.free for a in args))
            node._size = 1 + sum(a._size for a in args)
            return node
        return _intern((cls,) + args, factory)

    def _state(self):
        return self.args

    @property
    def children(self):
        return self.args

    def __repr__(self):
        return f"{type(self).__name__}{self.args!r}"


class Add(_Nary):
    __slots__ = ()


class Mul(_Nary):
    __slots__ = ()


class Pow(Expr):
    __slots__ = ("base", "exponent")

    @classmethod
    def _make(cls, base, exponent):
        exponent = float(exponent)

        def factory():
            node = object.__new__(cls)
            node.base, node.exponent = base, exponent
            node.free = base.free
            node._size = 1 + base._size
            return node
        return _intern((cls, base, exponent), factory)

    def _state(self):
        return (self.base, self.exponent)

    @property
    def children(self):
        return (self.base,)

    def __repr__(self):
        return f"Pow({self.base!r}, {self.exponent!r})"


class Neg(Expr):
    __slots__ = ("arg",)

    @classmethod
    def _make(cls, arg):
        def factory():
            node = object.__new__(cls)
            node.arg = arg
            node.free = arg.free
            node._size = 1 + arg._size
            return node
        return _intern((cls, arg), factory)

    def _state(self):
        return (self.arg,)

    @property
    def children(self):
        return (self.arg,)

    def __repr__(self):
        return f"Neg({self.arg!r})"


class Div(Expr):
    __slots__ = ("num", "den")

    @classmethod
    def _make(cls, num, den):
        def factory():
            node = object.__new__(cls)
            node.num, node.den = num, den
            node.free = num.free | den.free
            node._size = 1 + num._size + den._size
            return node
        return _intern((cls, num, den), factory)

    def _state(self):
        return (self.num, self.den)

    @property
    def children(self):
        return (self.num, self.den)

    def __repr__(self):
        return f"Div({self.num!r}, {self.den!r})"


class Func(Expr):
    __slots__ = ("name", "arg")

    @classmethod
    def _make(cls, name, arg):
        if name not in FUNCTIONS:
            raise ValueError(f"unknown function {name!r}")

        def factory():
            node = object.__new__(cls)
            node.name, node.arg = name, arg
            node.free = arg.free
            node._size = 1 + arg._size
            return node
        return _intern((cls, name, arg), factory)

    def _state(self):
        return (self.name, self.arg)

    @property
    def children(self):
        return (self.arg,)

    def __repr__(self):
        return f"Func({self.name}, {self.arg!r})"


def sort_key(s: Sym):
    return (_KIND_RANK[s.kind], s.index, s.name)


# -- leaf helpers -----------------------------------------------------------

def const(value) -> Const:
    return Const._make(value)


ZERO = const(0.0)
ONE = const(1.0)


def as_expr(value) -> Expr:
    if isinstance(value, Expr):
        return value
    if isinstance(value, numbers.Real):
        return const(value)
    raise TypeError(f"cannot convert {type(value).__name__} to an expression")


def sym(kind, index=0, name=None) -> Sym:
    return Sym._make(kind, index, name)


t = sym("t")


def q(i):
    return sym("q", i)


def qd(i):
    return sym("qd", i)


def qdd(i):
    return sym("qdd", i)


def qddd(i):
    return sym("qddd", i)


def qdddd(i):
    return sym("qdddd", i)


def lam(i):
    return sym("lam", i)


def lamd(i):
    return sym("lamd", i)


def param(name) -> Sym:
    return sym("param", name=name)


# -- raw constructors (no simplification) -----------------------------------

def raw_add(*terms):
    return Add._make(*terms)


def raw_mul(*factors):
    return Mul._make(*factors)


def raw_pow(base, exponent):
    return Pow._make(base, exponent)


def raw_neg(arg):
    return Neg._make(arg)


def raw_div(num, den):
    return Div._make(num, den)


def raw_func(name, arg):
    return Func._make(name, arg)


# -- simplifying constructors -------------------------------------------------

def _is_const(e, value=None):
    return isinstance(e, Const) and (value is None or e.value == value)


def _split_coeff(term):
    if isinstance(term, Mul) and isinstance(term.args[0], Const):
        rest = term.args[1:]
        return (rest[0] if len(rest) == 1 else Mul._make(*rest)), term.args[0].value
    return term, 1.0


def add(*terms) -> Expr:
    """Flattened sum: like terms collected, constants folded into one
    trailing term."""
    flat = []
    for term in terms:
        term = as_expr(term)
        if isinstance(term, Add):
            flat.extend(term.args)
        else:
            flat.append(term)
    total = None
    coeffs: dict = {}
    for term in flat:
        if isinstance(term, Const):
            total = term.value if total is None else total + term.value
            continue
        body, c = _split_coeff(term)
        coeffs[body] = coeffs[body] + c if body in coeffs else c
    rest = [mul(const(c), body) for body, c in coeffs.items() if c != 0.0]
    if total is not None and total != 0.0:
        rest.append(const(total))
    if not rest:
        return const(total) if total is not None else ZERO
    if len(rest) == 1:
        return rest[0]
    return Add._make(*rest)


def mul(*factors) -> Expr:
    """Flattened product: equal bases merged into powers, one leading
    constant coefficient."""
    flat = []
    for factor in factors:
        factor = as_expr(factor)
        if isinstance(factor, Mul):
            flat.extend(factor.args)
        else:
            flat.append(factor)
    coeff = None
    exponents: dict = {}
    for factor in flat:
        if isinstance(factor, Const):
            coeff = factor.value if coeff is None else coeff * factor.value
            continue
        base, k = (factor.base, factor.exponent) if isinstance(factor, Pow) else (factor, 1.0)
        exponents[base] = exponents[base] + k if base in exponents else k
    if coeff is not None and coeff == 0.0:
        return ZERO
    rest = []
    for base, k in exponents.items():
        factor = power(base, k)
        if isinstance(factor, Const):
            coeff = factor.value if coeff is None else coeff * factor.value
        else:
            rest.append(factor)
    if coeff is not None and coeff != 1.0:
        rest.insert(0, const(coeff))
    if not rest:
        return const(coeff) if coeff is not None else ONE
    if len(rest) == 1:
        return rest[0]
    return Mul._make(*rest)


def neg(arg) -> Expr:
    arg = as_expr(arg)
    if isinstance(arg, Const):
        return const(-arg.value)
    return mul(const(-1.0), arg)


def sub(a, b) -> Expr:
    return add(a, neg(b))


def div(num, den) -> Expr:
    num, den = as_expr(num), as_expr(den)
    if _is_const(den, 1.0):
        return num
    if _is_const(num, 0.0) and not _is_const(den, 0.0):
        return ZERO
    if isinstance(num, Const) and isinstance(den, Const) and den.value != 0.0:
        return const(num.value / den.value)
    return Div._make(num, den)


def power(base, exponent: float) -> Expr:
    base = as_expr(base)
    exponent = float(exponent)
    if exponent == 0.0:
        return ONE
    if exponent == 1.0:
        return base
    if isinstance(base, Const):
        folded = _fold_pow(base.value, exponent)
        if folded is not None:
            return const(folded)
    if isinstance(base, Pow) and exponent.is_integer():
        return power(base.base, base.exponent * exponent)
    return Pow._make(base, exponent)


def _fold_pow(value, exponent):
    try:
        out = math.pow(value, exponent)
    except (ValueError, OverflowError, ZeroDivisionError):
        return None
    return out if math.isfinite(out) else None


def func(name, arg) -> Expr:
    arg = as_expr(arg)
    if isinstance(arg, Const):
        from .evaluate import apply_function
        try:
            value = apply_function(name, arg.value)
        except (ValueError, OverflowError):
            value = None
        if value is not None and math.isfinite(value):
            return const(value)
    return Func._make(name, arg)


def simplify(e: Expr) -> Expr:
    """Rebuild ``e`` bottom-up through the simplifying constructors.

    Applies constant folding, 0/1 absorption and flattening of nested sums and
    products. Best-effort only: no like-term collection or canonical ordering.
    """
    memo: dict = {}

    def walk(node):
        out = memo.get(node)
        if out is not None:
            return out
        if isinstance(node, (Const, Sym)):
            out = node
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
