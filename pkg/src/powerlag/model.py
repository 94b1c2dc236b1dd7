"""Power-Lagrangian assembly and compilation.

The power Lagrangian is built from five ingredients::

    P = dL/dt - R + sum_a lamd_a * f_a + PE + sum_k Qr_k * qd_k

and compiled into partial-derivative tables, the covector X, the energy
function U and the right-hand side of its balance law.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from . import expr as ex
from .expr import Expr, ParseContext, lambdify, partial, total_time_derivative as D
from .jets import JetState, MissingJetError

__all__ = ["ModelError", "ModelSpec", "CompiledModel", "JetFunction",
           "compile_model", "compile_power", "energy_U", "balance_rhs",
           "SECOND_ORDER", "SECOND_ORDER_CONSTRAINED", "THIRD_ORDER"]

log = logging.getLogger(__name__)

SECOND_ORDER = "second_order"
SECOND_ORDER_CONSTRAINED = "second_order_constrained"
THIRD_ORDER = "third_order"

HESSIAN_PROBES = 20
HESSIAN_THRESHOLD = 1e-12
RANK_THRESHOLD = 1e-10


class ModelError(ValueError):
    pass


@dataclass
class ModelSpec:
    """User-facing ingredient bundle.

    Expression fields accept DSL text or ``Expr`` nodes; text is parsed
    against ``n``, the constraint count and the parameter names.
    """

    n: int
    L: Expr | str
    R: Expr | str = 0
    constraints: list = field(default_factory=list)
    PE: Expr | str = 0
    Qr: list | None = None
    params: dict = field(default_factory=dict)
    coords: list | None = None
    regularize_sgn: bool = False
    epsilon: float = 1e-3
    homogeneous_pe: bool = False
    gauge: Expr | str | None = None
    initial: JetState | None = None
    integrator: dict = field(default_factory=dict)
    name: str | None = None

    def __post_init__(self):
        self.n = int(self.n)
        self.params = {str(k): float(v) for k, v in self.params.items()}
        for name in self.params:
            if ex.parser.is_reserved(name):
                raise ModelError(f"parameter name {name!r} collides with a reserved identifier")
        self.constraints = list(self.constraints)
        context = ParseContext(self.n, len(self.constraints), tuple(self.params))
        conv = lambda e: ex.parse(e, context) if isinstance(e, str) else ex.as_expr(e)
        self.L, self.R, self.PE = conv(self.L), conv(self.R), conv(self.PE)
        self.constraints = [conv(f) for f in self.constraints]
        if self.gauge is not None:
            self.gauge = conv(self.gauge)
        if self.Qr is None:
            self.Qr = [ex.ZERO] * self.n
        self.Qr = [conv(Q) for Q in self.Qr]
        if len(self.Qr) != self.n:
            raise ModelError(f"expected {self.n} residual forces, got {len(self.Qr)}")
        if self.coords is None:
            self.coords = [f"q{i}" for i in range(self.n)]
        self.coords = list(self.coords)
        if len(self.coords) != self.n:
            raise ModelError("coordinate label count does not match n")
        if self.epsilon <= 0:
            raise ModelError("regularization epsilon must be positive")
        self._validate()

    @property
    def m(self) -> int:
        return len(self.constraints)

    def _validate(self):
        def check(label, e, order, allow_mult=False):
            top = ex.max_order(e)
            if top > order:
                raise ModelError(f"{label} has derivative order {top}, at most {order} allowed")
            if not allow_mult and any(s.kind in ("lam", "lamd") for s in e.free):
                raise ModelError(f"{label} may not contain multiplier symbols")
            bad = [s.name for s in e.free
                   if s.kind not in ("t", "param", "lam", "lamd") and s.index >= self.n]
            if bad:
                raise ModelError(f"{label} references out-of-range coordinates {bad}")

        check("L", self.L, 1)
        check("R", self.R, 1)
        for i, f in enumerate(self.constraints):
            check(f"f{i}", f, 1)
        check("PE", self.PE, 2)
        for i, Q in enumerate(self.Qr):
            check(f"Q{i}", Q, 0)
        if self.gauge is not None:
            check("gauge", self.gauge, 1)


class JetFunction:
    """Compiled vector of expressions evaluated at jet states."""

    def __init__(self, exprs, n, m, extra_symbols=(), extra_values=()):
        self.exprs = list(exprs)
        self.n, self.m = n, m
        layout = [ex.t]
        for kind in ex.COORD_KINDS:
            layout += [ex.sym(kind, i) for i in range(n)]
        layout += [ex.lamd(a) for a in range(m)]
        layout += list(extra_symbols)
        self._extra = [float(v) for v in extra_values]
        free = frozenset().union(*(e.free for e in self.exprs)) if self.exprs else frozenset()
        self.max_order = max([s.order for s in free if s.kind in ex.COORD_KINDS], default=-1)
        self.uses_mu = any(s.kind == "lamd" for s in free)
        stray = [s.name for s in free if s.kind == "lam"]
        if stray:
            raise ModelError(f"multiplier values {stray} cannot be evaluated")
        self._fn = lambdify(self.exprs, layout)

    def raw(self, t, jets, mu=None):
        """Evaluate from ``t``, a list of jet arrays (order 0 upward) and ``mu``."""
        nan = [float("nan")] * self.n
        values = [float(t)]
        for order in range(5):
            if order < len(jets) and jets[order] is not None:
                values.extend(np.asarray(jets[order], dtype=float).tolist())
            elif order <= self.max_order:
                raise MissingJetError(f"jet order {order} is required")
            else:
                values.extend(nan)
        if self.m:
            if mu is None:
                if self.uses_mu:
                    raise MissingJetError("multiplier rates are required")
                values.extend([float("nan")] * self.m)
            else:
                values.extend(np.asarray(mu, dtype=float).tolist())
        values.extend(self._extra)
        return np.array(self._fn(values), dtype=float)

    def __call__(self, jet: JetState) -> np.ndarray:
        jets = [jet.q, jet.qd, jet.qdd, jet.qddd, jet.qdddd]
        return self.raw(jet.t, jets, jet.mu)


@dataclass(eq=False)
class CompiledModel:
    """Assembled power Lagrangian with its derivative tables."""

    spec: ModelSpec | None
    n: int
    m: int
    P: Expr
    L: Expr
    F: Expr
    constraints: list
    dP_dq: list
    dP_dqd: list
    dP_dqdd: list
    D_dP_dqdd: list
    X: list
    hessian: list
    order_class: str
    U: Expr | None
    balance: Expr | None
    params: dict
    param_symbols: tuple = ()
    regularize: float | None = None
    gauge: Expr | None = None

    def __post_init__(self):
        self._functions = {}

    @property
    def constrained(self) -> bool:
        return self.m > 0

    @property
    def third_order(self) -> bool:
        return self.order_class == THIRD_ORDER

    def post(self, e: Expr) -> Expr:
        """Apply the model's sgn regularization to a derived expression."""
        return e if self.regularize is None else ex.regularize_sgn(e, self.regularize)

    @cached_property
    def Y(self) -> list:
        """Second covector dP/dq - d/dt dP/dqd + d2/dt2 dP/dqdd."""
        try:
            return [self.post(ex.sub(ex.add(self.dP_dq[k], D(D(self.dP_dqdd[k]))), D(self.dP_dqd[k])))
                    for k in range(self.n)]
        except ex.OrderOverflowError as exc:
            raise ModelError(f"Y covector unavailable for this model: {exc}") from None

    @cached_property
    def constraint_jacobian(self) -> list:
        return [[self.post(partial(f, ex.qd(k))) for k in range(self.n)] for f in self.constraints]

    @cached_property
    def constraint_rates(self) -> list:
        return [self.post(D(f)) for f in self.constraints]

    @cached_property
    def DU(self) -> Expr:
        return self.post(D(self.U))

    def function(self, key: str, exprs) -> JetFunction:
        fn = self._functions.get(key)
        if fn is None:
            values = [self.params[s.name] for s in self.param_symbols]
            fn = JetFunction(exprs, self.n, self.m, self.param_symbols, values)
            self._functions[key] = fn
        return fn

    def free_params_binding(self) -> dict:
        return {s: self.params[s.name] for s in self.param_symbols}


def _bind(e, mapping):
    return ex.substitute(e, mapping) if mapping else e


def _probe_jets(n, m, rng, count, box=2.0):
    for _ in range(count):
        yield JetState(
            t=rng.uniform(0.5, box),
            q=rng.uniform(-box, box, n), qd=rng.uniform(-box, box, n),
            qdd=rng.uniform(-box, box, n), qddd=rng.uniform(-box, box, n),
            mu=rng.uniform(-box, box, m) if m else None,
        )


def compile_power(P: Expr, n: int, *, m: int = 0, L: Expr | None = None,
                  constraints=(), params=None, param_symbols=(),
                  regularize: float | None = None, gauge: Expr | None = None,
                  spec=None, probe_seed: int = 0) -> CompiledModel:
    """Compile a ready-made power Lagrangian ``P``.

    ``L`` (optional) is the conservative part used for ``F = P - dL/dt`` and
    the energy function; without it ``F = P`` and ``U`` uses ``L = 0``.
    ``gauge`` names a quantity g(t, q, qd) held fixed by the jerk solve
    (d2g/dt2 = 0) when X alone leaves the jerk undetermined.
    """
    params = dict(params or {})
    post = (lambda e: e) if regularize is None else (lambda e: ex.regularize_sgn(e, regularize))
    L = ex.ZERO if L is None else L
    dP_dq = [partial(P, ex.q(k)) for k in range(n)]
    dP_dqd = [partial(P, ex.qd(k)) for k in range(n)]
    dP_dqdd = [partial(P, ex.qdd(k)) for k in range(n)]
    D_dP_dqdd = [D(post(e)) for e in dP_dqdd]
    X = [post(ex.sub(dP_dqd[k], ex.mul(2.0, D_dP_dqdd[k]))) for k in range(n)]
    hessian = [[post(partial(dP_dqdd[k], ex.qdd(j))) for j in range(n)] for k in range(n)]

    cm = CompiledModel(
        spec=spec, n=n, m=m, P=P, L=L, F=ex.sub(P, D(L)), constraints=list(constraints),
        dP_dq=[post(e) for e in dP_dq], dP_dqd=[post(e) for e in dP_dqd],
        dP_dqdd=[post(e) for e in dP_dqdd], D_dP_dqdd=D_dP_dqdd, X=X,
        hessian=hessian, order_class=SECOND_ORDER, U=None, balance=None,
        params=params, param_symbols=tuple(param_symbols), regularize=regularize,
        gauge=gauge,
    )
    cm.order_class = _classify(cm, probe_seed)
    if cm.third_order and m:
        raise ModelError("radiative terms combined with multiplier constraints are not supported")
    if gauge is not None and not cm.third_order:
        raise ModelError("a gauge quantity only applies to third-order models")
    if m:
        _check_rank(cm, probe_seed)

    F = cm.F
    dF_dqdd = [partial(F, ex.qdd(j)) for j in range(n)]
    dF_dqd = [partial(F, ex.qd(j)) for j in range(n)]
    dL_dqd = [partial(L, ex.qd(j)) for j in range(n)]
    cm.U = post(ex.sub(ex.add(*(ex.mul(2.0, dF_dqdd[j], ex.qd(j)) for j in range(n)),
                                *(ex.mul(dL_dqd[j], ex.qd(j)) for j in range(n))), L))
    cm.balance = post(ex.sub(ex.add(*(ex.mul(dF_dqd[k], ex.qd(k)) for k in range(n)),
                                    *(ex.mul(2.0, dF_dqdd[k], ex.qdd(k)) for k in range(n))),
                             partial(L, ex.t)))
    return cm


def _classify(cm, seed):
    entries = [h for row in cm.hessian for h in row]
    if all(h is ex.ZERO for h in entries):
        return SECOND_ORDER_CONSTRAINED if cm.m else SECOND_ORDER
    fn = cm.function("hessian", entries)
    rng = np.random.default_rng(seed)
    hits = 0
    for jet in _probe_jets(cm.n, cm.m, rng, 50 * HESSIAN_PROBES):
        try:
            values = fn(jet)
        except ex.EvaluationError:
            continue
        if not np.all(np.isfinite(values)):
            continue
        hits += 1
        if np.max(np.abs(values)) > HESSIAN_THRESHOLD:
            return THIRD_ORDER
        if hits >= HESSIAN_PROBES:
            break
    return SECOND_ORDER_CONSTRAINED if cm.m else SECOND_ORDER


def _check_rank(cm, seed):
    G = cm.function("constraint_jacobian", [g for row in cm.constraint_jacobian for g in row])
    rng = np.random.default_rng(seed + 1)
    smallest = 0.0
    for jet in _probe_jets(cm.n, cm.m, rng, HESSIAN_PROBES):
        try:
            matrix = G(jet).reshape(cm.m, cm.n)
        except ex.EvaluationError:
            continue
        smallest = max(smallest, np.linalg.svd(matrix, compute_uv=False).min())
    if smallest <= RANK_THRESHOLD:
        raise ModelError("constraint Jacobian dfa/dqd is rank deficient at every probe state")


def compile_model(spec: ModelSpec, *, bind_params: bool = True, probe_seed: int = 0) -> CompiledModel:
    """Assemble ``P`` from the ingredients of ``spec`` and compile it.

    With ``bind_params`` (the default) parameter values are substituted and
    constants folded; otherwise parameters stay symbolic, which is what
    symbolic printing of the equations of motion uses.
    """
    mapping = {ex.param(k): v for k, v in spec.params.items()} if bind_params else {}
    L = _bind(spec.L, mapping)
    R = _bind(spec.R, mapping)
    PE = _bind(spec.PE, mapping)
    fs = [_bind(f, mapping) for f in spec.constraints]
    Qr = [_bind(Q, mapping) for Q in spec.Qr]
    gauge = None if spec.gauge is None else _bind(spec.gauge, mapping)
    try:
        P = ex.add(D(L), ex.neg(R), *(ex.mul(ex.lamd(a), f) for a, f in enumerate(fs)),
                   PE, *(ex.mul(Q, ex.qd(k)) for k, Q in enumerate(Qr)))
    except ex.OrderOverflowError as exc:
        raise ModelError(str(exc)) from None
    extra = () if gauge is None else (gauge,)
    used = sorted({s for e in (P, L, *fs, *extra) for s in e.free if s.kind == "param"},
                  key=lambda s: s.name)
    missing = [s.name for s in used if s.name not in spec.params]
    if missing:
        raise ModelError(f"unbound parameters {missing}")
    return compile_power(
        P, spec.n, m=spec.m, L=L, constraints=fs, params=spec.params,
        param_symbols=tuple(used) if not bind_params else (),
        regularize=spec.epsilon if spec.regularize_sgn else None,
        gauge=gauge, spec=spec, probe_seed=probe_seed,
    )


def energy_U(cm: CompiledModel) -> Expr:
    """U = 2 dF/dqdd . qd + dL/dqd . qd - L, with F = P - dL/dt."""
    return cm.U


def balance_rhs(cm: CompiledModel) -> Expr:
    """dF/dqd . qd + 2 dF/dqdd . qdd - dL/dt|explicit; equals dU/dt on solutions."""
    return cm.balance
