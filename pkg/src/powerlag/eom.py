"""Covectors X, Y and the solves for the highest derivative.

X_k = dP/dqd_k - 2 d/dt dP/dqdd_k is affine in the jerk, and for models
without radiative terms affine in (qdd, mu). The coefficient blocks are
taken as symbolic partials, so each solve is one dense linear system.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import expr as ex
from .expr import partial, substitute, total_time_derivative as D
from .jets import JetState
from .model import THIRD_ORDER, CompiledModel, ModelError

__all__ = ["Covector", "JetState", "DegenerateDynamicsError", "eval_X", "eval_Y",
           "eval_momentum", "mass_matrix", "accel_solve", "jerk_solve", "COND_LIMIT"]

COND_LIMIT = 1e12
RESIDUAL_TOL = 1e-10


class DegenerateDynamicsError(ArithmeticError):
    """The linear system for the highest derivative is singular."""


@dataclass(frozen=True)
class Covector:
    components: np.ndarray
    kind: str

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.components, dtype=dtype)

    def __len__(self):
        return len(self.components)

    def __getitem__(self, k):
        return self.components[k]


def _cached(cm, key, build):
    hit = cm._functions.get(key)
    if hit is None:
        hit = cm._functions[key] = build()
    return hit


def eval_X(cm: CompiledModel, s: JetState) -> Covector:
    return Covector(cm.function("X", cm.X)(s), "X")


def eval_Y(cm: CompiledModel, s: JetState) -> Covector:
    return Covector(cm.function("Y", cm.Y)(s), "Y")


def eval_momentum(cm: CompiledModel, s: JetState) -> np.ndarray:
    """dP/dqdd at ``s`` (a covector, like X)."""
    return cm.function("dP_dqdd", cm.dP_dqdd)(s)


def mass_matrix(cm: CompiledModel, s: JetState) -> np.ndarray:
    """M = 2 d2P/dqdd dqdd; X = X|_{qddd=0} - M qddd."""
    flat = [ex.mul(2.0, h) for row in cm.hessian for h in row]
    return cm.function("mass", flat)(s).reshape(cm.n, cm.n)


def _require_affine(cm, exprs, unknowns, what):
    """Second partials in the unknowns must vanish (checked symbolically)."""
    for e in exprs:
        for u in unknowns:
            if partial(e, u) is not ex.ZERO:
                raise ModelError(f"{what} is not affine in {u.name}; cannot solve linearly")


def _accel_system(cm):
    n, m = cm.n, cm.m
    qdd = [ex.qdd(j) for j in range(n)]
    mu = [ex.lamd(a) for a in range(m)]
    unknowns = qdd + mu
    zero = {u: ex.ZERO for u in unknowns}
    A = [[cm.post(partial(X, u)) for u in unknowns] for X in cm.X]
    rates = cm.constraint_rates
    G = [[cm.post(partial(r, u)) for u in qdd] for r in rates]
    _require_affine(cm, [a for row in A + G for a in row], unknowns, "X")
    X0 = [substitute(X, zero) for X in cm.X]
    r0 = [substitute(r, zero) for r in rates]
    exprs = X0 + r0 + list(cm.constraints) + [a for row in A for a in row] + [g for row in G for g in row]
    return cm.function("accel", exprs)


def accel_solve(cm: CompiledModel, t, q, qd, *, beta: float = 0.0):
    """Accelerations and multiplier rates for a second-order model.

    Solves ``[A B; G 0] [qdd; mu] = [-X0; -(r0 + beta f)]`` where ``X0`` and
    ``r0`` are X and df/dt with the unknowns set to zero.
    """
    if cm.order_class == THIRD_ORDER:
        raise ModelError("accel_solve needs a second-order model; use jerk_solve")
    n, m = cm.n, cm.m
    fn = _cached(cm, "accel_system", lambda: _accel_system(cm))
    values = fn.raw(t, [np.atleast_1d(q), np.atleast_1d(qd)], np.zeros(m))
    size = n + m
    X0, r0, f = values[:n], values[n:n + m], values[n + m:n + 2 * m]
    offset = n + 2 * m
    K = np.zeros((size, size))
    K[:n, :] = values[offset:offset + n * size].reshape(n, size)
    offset += n * size
    K[n:, :n] = values[offset:offset + m * n].reshape(m, n)
    rhs = np.concatenate([-X0, -(r0 + beta * f)])
    x = _solve(K, rhs, "acceleration")
    return x[:n], x[n:]


def _jerk_system(cm):
    qddd = [ex.qddd(j) for j in range(cm.n)]
    rows = list(cm.X)
    if cm.gauge is not None:
        rows.append(cm.post(D(D(cm.gauge))))
    C = [[partial(X, u) for u in qddd] for X in rows]
    _require_affine(cm, [c for row in C for c in row], qddd, "X")
    X0 = [substitute(X, {u: ex.ZERO for u in qddd}) for X in rows]
    return cm.function("jerk", X0 + [c for row in C for c in row])


def jerk_solve(cm: CompiledModel, t, q, qd, qdd) -> np.ndarray:
    """Jerk of a third-order model from ``X0 + C qddd = 0``, C = dX/dqddd = -M.

    A model with a gauge quantity g (for reparametrization-invariant
    models, whose jerk X fixes only up to a multiple of qd) gets the extra
    row d2g/dt2 = 0; the stacked system must then be consistent and of
    full column rank.
    """
    if cm.order_class != THIRD_ORDER:
        raise ModelError("jerk_solve needs a third-order model")
    n = cm.n
    rows = n + (cm.gauge is not None)
    fn = _cached(cm, "jerk_system", lambda: _jerk_system(cm))
    values = fn.raw(t, [np.atleast_1d(q), np.atleast_1d(qd), np.atleast_1d(qdd)])
    X0, C = values[:rows], values[rows:].reshape(rows, n)
    if cm.gauge is not None:
        return _solve_stacked(C, -X0, "jerk")
    return _solve(C, -X0, "jerk")


def _solve_stacked(K, rhs, what):
    if not (np.all(np.isfinite(K)) and np.all(np.isfinite(rhs))):
        raise DegenerateDynamicsError(f"non-finite {what} system")
    x, _, rank, sigma = np.linalg.lstsq(K, rhs, rcond=None)
    cond = sigma[0] / sigma[-1] if sigma[-1] > 0 else np.inf
    if cond > COND_LIMIT:
        raise DegenerateDynamicsError(f"singular {what} system (condition number {cond:.3g})")
    residual = np.linalg.norm(K @ x - rhs)
    scale = max(1.0, np.linalg.norm(rhs), np.linalg.norm(K) * np.linalg.norm(x))
    if residual > 1e3 * RESIDUAL_TOL * scale:
        raise DegenerateDynamicsError(f"inconsistent {what} system (residual {residual:.3g})")
    return x


def _solve(K, rhs, what):
    if not (np.all(np.isfinite(K)) and np.all(np.isfinite(rhs))):
        raise DegenerateDynamicsError(f"non-finite {what} system")
    cond = np.linalg.cond(K)
    if not np.isfinite(cond) or cond > COND_LIMIT:
        raise DegenerateDynamicsError(f"singular {what} system (condition number {cond:.3g})")
    x = np.linalg.solve(K, rhs)
    residual = np.linalg.norm(K @ x - rhs)
    scale = max(1.0, np.linalg.norm(rhs), np.linalg.norm(K) * np.linalg.norm(x))
    if residual > RESIDUAL_TOL * scale:
        raise DegenerateDynamicsError(f"{what} solve residual {residual:.3g} too large")
    return x
