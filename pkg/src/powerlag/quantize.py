"""Generalized momenta p = dP/dqdd, the Legendre function W = p.qdd - P,
the modified canonical equations and the inverted-oscillator spectrum.

For a third-order model the state (q, qd, p) evolves by

    dq/dt = qd,  dqd/dt = dW/dp = qdd(p),  dp/dt = -1/2 dW/dqd = 1/2 dP/dqd

where the factor 1/2 is what X = dP/dqd - 2 dp/dt = 0 demands. It makes
the flow non-symplectic.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp

from .eom import COND_LIMIT, DegenerateDynamicsError
from .jets import JetState
from .model import CompiledModel, ModelError

__all__ = ["LegendreState", "LegendreError", "SpectrumParams", "legendre_W", "canonical_rhs",
           "canonical_trajectory", "momenta", "spectrum_Wn", "NEWTON_TOL", "NEWTON_MAX_ITER"]

NEWTON_TOL = 1e-12
NEWTON_MAX_ITER = 50


class LegendreError(ArithmeticError):
    """The momentum map could not be inverted."""


@dataclass
class LegendreState:
    t: float
    q: np.ndarray
    qd: np.ndarray
    p: np.ndarray

    def __post_init__(self):
        self.t = float(self.t)
        self.q, self.qd, self.p = (np.atleast_1d(np.asarray(v, dtype=float))
                                   for v in (self.q, self.qd, self.p))
        if not len(self.q) == len(self.qd) == len(self.p):
            raise ValueError("q, qd and p must have the same length")


@dataclass(frozen=True)
class SpectrumParams:
    """Viscous gamma, radiative mu, the product hbar*Lambda, p0 and time."""

    gamma: float
    mu: float
    hlambda: float
    p0: float
    t: float = 0.0

    def __post_init__(self):
        for name in ("gamma", "mu", "hlambda"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.p0 == 0:
            raise ValueError("p0 must be nonzero")
        if not self.t >= 0:
            raise ValueError("t must be nonnegative")

    @property
    def omega(self) -> float:
        return 1.0 / (math.sqrt(self.gamma * self.mu) * self.hlambda)


def _require_third_order(cm):
    if not cm.third_order:
        raise ModelError(f"the momentum map is invertible only for third-order models "
                         f"(this one is {cm.order_class})")


def _tables(cm):
    n = cm.n
    return (cm.function("dP_dqdd", cm.dP_dqdd),
            cm.function("hessian_flat", [h for row in cm.hessian for h in row]),
            cm.function("P", [cm.post(cm.P)]),
            cm.function("dP_dqd", cm.dP_dqd), n)


def momenta(cm: CompiledModel, s: JetState) -> np.ndarray:
    """p = dP/dqdd at a jet with accelerations."""
    return cm.function("dP_dqdd", cm.dP_dqdd)(s)


def _invert(cm, s):
    mom, hess, _, _, n = _tables(cm)
    jets = [s.q, s.qd, np.zeros(n)]
    scale = max(1.0, float(np.max(np.abs(s.p))))
    for _ in range(NEWTON_MAX_ITER + 1):
        residual = mom.raw(s.t, jets) - s.p
        if np.max(np.abs(residual)) <= NEWTON_TOL * scale:
            return jets[2]
        H = hess.raw(s.t, jets).reshape(n, n)
        if not np.all(np.isfinite(H)) or np.linalg.cond(H) > COND_LIMIT:
            raise DegenerateDynamicsError("acceleration Hessian is singular on the Newton path")
        jets[2] = jets[2] - np.linalg.solve(H, residual)
    raise LegendreError(f"Newton inversion of p = dP/dqdd did not converge in {NEWTON_MAX_ITER} steps")


def legendre_W(cm: CompiledModel, s: LegendreState):
    """W = p.qdd - P with qdd recovered from p = dP/dqdd by Newton's method.

    Returns ``(W, qdd)``.
    """
    _require_third_order(cm)
    qdd = _invert(cm, s)
    _, _, P, _, _ = _tables(cm)
    W = float(s.p @ qdd - P.raw(s.t, [s.q, s.qd, qdd])[0])
    return W, qdd


def canonical_rhs(cm: CompiledModel, s: LegendreState, *, factor: float = 0.5):
    """(dqd/dt, dp/dt) = (dW/dp, -factor dW/dqd), via the envelope identities
    dW/dp = qdd and dW/dqd = -dP/dqd at the recovered qdd."""
    _require_third_order(cm)
    qdd = _invert(cm, s)
    _, _, _, dP_dqd, _ = _tables(cm)
    return qdd, factor * dP_dqd.raw(s.t, [s.q, s.qd, qdd])


def canonical_trajectory(cm: CompiledModel, initial: JetState, t_eval, *, factor: float = 0.5,
                         rtol: float = 1e-12, atol: float = 1e-12):
    """Integrate (q, qd, p) from a jet with accelerations; p(0) = dP/dqdd.

    Returns a dict of arrays ``t``, ``q``, ``qd``, ``qdd`` and ``p`` at
    ``t_eval`` (an increasing grid starting at ``initial.t``).
    """
    _require_third_order(cm)
    n = cm.n
    t_eval = np.asarray(t_eval, dtype=float)
    y0 = np.concatenate([initial.q, initial.qd, momenta(cm, initial)])

    def rhs(t, y):
        s = LegendreState(t, y[:n], y[n:2 * n], y[2 * n:])
        qdd, pdot = canonical_rhs(cm, s, factor=factor)
        return np.concatenate([s.qd, qdd, pdot])

    sol = solve_ivp(rhs, (t_eval[0], t_eval[-1]), y0, method="DOP853", t_eval=t_eval,
                    rtol=rtol, atol=atol)
    if not sol.success:
        raise LegendreError(f"canonical integration failed: {sol.message}")
    q, qd, p = sol.y[:n].T, sol.y[n:2 * n].T, sol.y[2 * n:].T
    qdd = np.array([_invert(cm, LegendreState(t, a, b, c)) for t, a, b, c in zip(sol.t, q, qd, p)])
    return {"t": sol.t, "q": q, "qd": qd, "qdd": qdd, "p": p}


def spectrum_Wn(sp: SpectrumParams, n: int) -> float:
    """W_n = 1.5 gamma (hbar Lambda)^2 exp(-4 omega t) pi^2 n^2 / p0^2."""
    if int(n) != n or n < 0:
        raise ValueError("n must be a nonnegative integer")
    return (1.5 * sp.gamma * sp.hlambda ** 2 * math.exp(-4.0 * sp.omega * sp.t)
            * math.pi ** 2 * n * n / sp.p0 ** 2)
