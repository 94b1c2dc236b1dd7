"""Time integration of compiled models.

The state is ``(q, qd)`` for second-order models and ``(q, qd, qdd)`` for
third-order ones; the highest derivative comes from ``accel_solve`` or
``jerk_solve`` inside the right-hand side. Every accepted step is recorded
together with the energy function U and its balance law.
"""
from __future__ import annotations

import io
import json
import logging
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .eom import DegenerateDynamicsError, accel_solve, jerk_solve
from .expr import EvaluationError
from .jets import JetState
from .model import CompiledModel

__all__ = ["IntegratorConfig", "Trajectory", "InitialConditionError", "simulate",
           "monitor_balance", "balance_residuals", "COMPLETED", "STEP_FAILURE", "SINGULAR_DYNAMICS", "MAX_STEPS"]

log = logging.getLogger(__name__)

COMPLETED = "completed"
STEP_FAILURE = "step_failure"
SINGULAR_DYNAMICS = "singular_dynamics"
MAX_STEPS = "max_steps"

CONSTRAINT_TOL = 1e-9

# Dormand-Prince 5(4) tableau
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_B = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_B_LOW = np.array([5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40])
_E = _B - _B_LOW


class InitialConditionError(ValueError):
    pass


class _StepFailure(Exception):
    pass


class _CeilingExceeded(_StepFailure):
    pass


@dataclass(frozen=True)
class IntegratorConfig:
    method: str = "rk45"
    t0: float = 0.0
    t1: float = 1.0
    dt: float = 1e-2
    rel_tol: float = 1e-8
    abs_tol: float = 1e-10
    max_steps: int = 1_000_000
    beta: float = 0.0
    accel_ceiling: float = 1e12
    dt_max: float | None = None

    def __post_init__(self):
        if self.method not in ("rk4", "rk45"):
            raise ValueError(f"unknown method {self.method!r}")
        if not self.t1 > self.t0:
            raise ValueError("t1 must exceed t0")
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if not (self.rel_tol > 0 and self.abs_tol > 0):
            raise ValueError("tolerances must be positive")
        if self.max_steps < 1:
            raise ValueError("max_steps must be positive")

    def with_overrides(self, **changes) -> "IntegratorConfig":
        return replace(self, **{k: v for k, v in changes.items() if v is not None})


@dataclass
class Trajectory:
    """Records at accepted steps; arrays are indexed by record."""

    t: np.ndarray
    q: np.ndarray
    qd: np.ndarray
    qdd: np.ndarray
    qddd: np.ndarray
    mu: np.ndarray
    U: np.ndarray
    balance: np.ndarray
    balance_residual: np.ndarray
    constraint: np.ndarray
    status: str
    message: str = ""
    third_order: bool = False
    coords: list = field(default_factory=list)

    @property
    def n(self) -> int:
        return self.q.shape[1]

    @property
    def m(self) -> int:
        return self.mu.shape[1]

    def __len__(self):
        return len(self.t)

    def jet(self, i) -> JetState:
        return JetState(t=self.t[i], q=self.q[i], qd=self.qd[i], qdd=self.qdd[i],
                        qddd=self.qddd[i] if self.third_order else None,
                        mu=self.mu[i] if self.m else None)

    def columns(self) -> list:
        n, m = self.n, self.m
        names = ["t"] + [f"q{i}" for i in range(n)] + [f"qd{i}" for i in range(n)]
        if self.third_order:
            names += [f"qdd{i}" for i in range(n)]
        names += [f"mu{a}" for a in range(m)]
        names += ["U", "balance_residual"] + [f"f{a}" for a in range(m)]
        return names

    def table(self) -> np.ndarray:
        parts = [self.t[:, None], self.q, self.qd]
        if self.third_order:
            parts.append(self.qdd)
        parts += [self.mu, self.U[:, None], self.balance_residual[:, None], self.constraint]
        return np.hstack(parts)

    def to_csv(self) -> str:
        out = io.StringIO()
        out.write(",".join(self.columns()) + "\n")
        for row in self.table():
            out.write(",".join(_fmt(v) for v in row) + "\n")
        return out.getvalue()

    def to_jsonl(self) -> str:
        names = self.columns()
        lines = [json.dumps(dict(zip(names, (float(v) for v in row))), allow_nan=True)
                 for row in self.table()]
        return "\n".join(lines) + "\n"


def _fmt(value: float) -> str:
    return f"{value:.17g}"


class _System:
    """Derivative closure and per-record diagnostics for one model."""

    def __init__(self, cm: CompiledModel, cfg: IntegratorConfig):
        self.cm, self.cfg = cm, cfg
        self.n, self.m = cm.n, cm.m
        self.third = cm.third_order
        self.U = cm.function("U", [cm.U])
        self.balance = cm.function("balance", [cm.balance])
        self.DU = cm.function("DU", [cm.DU])
        self.f = cm.function("constraints", cm.constraints) if self.m else None
        self.evaluations = 0

    def split(self, y):
        n = self.n
        return y[:n], y[n:2 * n], (y[2 * n:3 * n] if self.third else None)

    def highest(self, t, y):
        """qdd and mu (second order) or qddd (third order) at state ``y``."""
        self.evaluations += 1
        q, qd, qdd = self.split(y)
        if self.third:
            return jerk_solve(self.cm, t, q, qd, qdd), None
        return accel_solve(self.cm, t, q, qd, beta=self.cfg.beta)

    def rhs(self, t, y):
        q, qd, qdd = self.split(y)
        top, _ = self.highest(t, y)
        out = np.concatenate([qd, qdd, top]) if self.third else np.concatenate([qd, top])
        if not np.all(np.isfinite(out)):
            raise _StepFailure(f"non-finite derivative at t={t!r}")
        accel = qdd if self.third else top
        if np.max(np.abs(accel), initial=0.0) > self.cfg.accel_ceiling:
            raise _CeilingExceeded(f"acceleration exceeded ceiling {self.cfg.accel_ceiling:g} at t={t!r}")
        return out

    def record(self, t, y):
        q, qd, qdd = self.split(y)
        top, mu = self.highest(t, y)
        if self.third:
            qddd = top
        else:
            qdd, qddd = top, None
        mu = np.zeros(0) if mu is None else mu
        jets = [q, qd, qdd, qddd]
        U = self.U.raw(t, jets, mu)[0]
        rhs = self.balance.raw(t, jets, mu)[0]
        dU = self.DU.raw(t, jets, mu)[0]
        f = self.f.raw(t, jets, mu) if self.m else np.zeros(0)
        return (t, q.copy(), qd.copy(), qdd.copy(),
                qddd.copy() if qddd is not None else np.full(self.n, np.nan),
                mu.copy(), U, rhs, dU - rhs, f)


def _initial_state(cm, initial: JetState):
    if initial.n != cm.n:
        raise InitialConditionError(f"initial state has {initial.n} coordinates, model has {cm.n}")
    if initial.qd is None:
        raise InitialConditionError("initial velocity is required")
    parts = [initial.q, initial.qd]
    if cm.third_order:
        if initial.qdd is None:
            raise InitialConditionError("third-order models need an initial acceleration")
        parts.append(initial.qdd)
    y = np.concatenate(parts)
    if not np.all(np.isfinite(y)):
        raise InitialConditionError("initial state is not finite")
    if cm.m:
        f = cm.function("constraints", cm.constraints).raw(initial.t, [initial.q, initial.qd])
        if np.max(np.abs(f)) > CONSTRAINT_TOL:
            raise InitialConditionError(
                f"initial state violates constraints (max |f| = {np.max(np.abs(f)):.3g})")
    return y


def simulate(cm: CompiledModel, initial: JetState, cfg: IntegratorConfig) -> Trajectory:
    """Integrate from ``initial`` over ``[cfg.t0, cfg.t1]``.

    The time of ``initial`` is ignored in favour of ``cfg.t0``. Failures
    after the first record end the run early with a status instead of
    raising; the partial trajectory is returned.
    """
    system = _System(cm, cfg)
    y = _initial_state(cm, initial)
    records = []
    t = float(cfg.t0)
    try:
        records.append(system.record(t, y))
    except DegenerateDynamicsError as exc:
        raise InitialConditionError(f"dynamics singular at the initial state: {exc}") from exc
    stepper = _rk4 if cfg.method == "rk4" else _rk45
    status, message = stepper(system, cfg, t, y, records)
    if status != COMPLETED:
        log.warning("integration stopped: %s (%s)", status, message)
    return _assemble(records, status, message, cm)


def _assemble(records, status, message, cm):
    cols = list(zip(*records))
    n, m = cm.n, cm.m
    count = len(records)

    def block(i, width):
        return np.array(cols[i], dtype=float).reshape(count, width)

    return Trajectory(
        t=np.array(cols[0], dtype=float),
        q=block(1, n),
        qd=block(2, n),
        qdd=block(3, n),
        qddd=block(4, n),
        mu=block(5, m),
        U=np.array(cols[6], dtype=float),
        balance=np.array(cols[7], dtype=float),
        balance_residual=np.array(cols[8], dtype=float),
        constraint=block(9, m),
        status=status, message=message, third_order=cm.third_order,
        coords=list(cm.spec.coords) if cm.spec is not None else [f"q{i}" for i in range(n)],
    )


def _guarded(system, t, y, records):
    """Record the state; map solver failures to statuses."""
    try:
        records.append(system.record(t, y))
    except DegenerateDynamicsError as exc:
        return SINGULAR_DYNAMICS, str(exc)
    except (EvaluationError, FloatingPointError, OverflowError) as exc:
        return STEP_FAILURE, str(exc)
    if not all(np.all(np.isfinite(np.atleast_1d(v))) for v in records[-1][:4]):
        records.pop()
        return STEP_FAILURE, f"non-finite state at t={t!r}"
    return None


def _rk4(system, cfg, t0, y, records):
    span = cfg.t1 - cfg.t0
    steps = max(1, int(math.ceil(span / cfg.dt - 1e-9)))
    t = t0
    for i in range(1, min(steps, cfg.max_steps) + 1):
        t_next = cfg.t1 if i == steps else cfg.t0 + i * cfg.dt
        h = t_next - t
        try:
            k1 = system.rhs(t, y)
            k2 = system.rhs(t + h / 2, y + h / 2 * k1)
            k3 = system.rhs(t + h / 2, y + h / 2 * k2)
            k4 = system.rhs(t + h, y + h * k3)
        except DegenerateDynamicsError as exc:
            return SINGULAR_DYNAMICS, str(exc)
        except (_StepFailure, EvaluationError, FloatingPointError, OverflowError) as exc:
            return STEP_FAILURE, str(exc)
        y = y + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        t = t_next
        failed = _guarded(system, t, y, records)
        if failed:
            return failed
    if steps > cfg.max_steps:
        return MAX_STEPS, f"stopped after {cfg.max_steps} steps at t={t!r}"
    return COMPLETED, ""


def _rk45(system, cfg, t0, y, records):
    span = cfg.t1 - cfg.t0
    h_min = cfg.dt / 1e4
    h_max = span / 2 if cfg.dt_max is None else min(span / 2, cfg.dt_max)
    h = min(max(cfg.dt, h_min), h_max)
    t = t0
    try:
        k_first = system.rhs(t, y)
    except DegenerateDynamicsError as exc:
        return SINGULAR_DYNAMICS, str(exc)
    except (_StepFailure, EvaluationError, FloatingPointError, OverflowError) as exc:
        return STEP_FAILURE, str(exc)
    accepted = 0
    while t < cfg.t1:
        if accepted >= cfg.max_steps:
            return MAX_STEPS, f"stopped after {cfg.max_steps} steps at t={t!r}"
        last = t + h >= cfg.t1 - 1e-12 * max(1.0, abs(cfg.t1))
        step = cfg.t1 - t if last else h
        try:
            ks = [k_first]
            for i in range(1, 7):
                yi = y + step * sum(a * k for a, k in zip(_A[i], ks))
                ks.append(system.rhs(t + _C[i] * step, yi))
            y_new = y + step * sum(b * k for b, k in zip(_B, ks) if b != 0.0)
            err_vec = step * sum(e * k for e, k in zip(_E, ks) if e != 0.0)
        except DegenerateDynamicsError as exc:
            return SINGULAR_DYNAMICS, str(exc)
        except _CeilingExceeded as exc:
            return STEP_FAILURE, str(exc)
        except (_StepFailure, EvaluationError, FloatingPointError, OverflowError) as exc:
            if step <= h_min * (1 + 1e-12):
                return STEP_FAILURE, str(exc)
            h = max(step / 4, h_min)
            continue
        scale = cfg.abs_tol + cfg.rel_tol * np.maximum(np.abs(y), np.abs(y_new))
        err = float(np.sqrt(np.mean((err_vec / scale) ** 2)))
        if not math.isfinite(err):
            err = math.inf
        if err <= 1.0:
            t = cfg.t1 if last else t + step
            y = y_new
            k_first = ks[6]
            accepted += 1
            failed = _guarded(system, t, y, records)
            if failed:
                return failed
            factor = 5.0 if err == 0.0 else min(5.0, max(0.2, 0.9 * err ** -0.2))
            h = min(max(step * factor, h_min), h_max)
        else:
            if step <= h_min * (1 + 1e-12):
                return STEP_FAILURE, f"step size fell below dt/1e4 at t={t!r}"
            factor = 0.2 if not math.isfinite(err) else max(0.2, 0.9 * err ** -0.2)
            h = max(step * factor, h_min)
    return COMPLETED, ""


def monitor_balance(cm: CompiledModel, traj: Trajectory) -> float:
    """Largest |dU/dt - balance rhs| over interior records.

    dU/dt is the three-point finite difference on the (possibly nonuniform)
    record grid, second-order accurate in the local step.
    """
    return float(np.max(balance_residuals(traj), initial=0.0))


def balance_residuals(traj: Trajectory) -> np.ndarray:
    if len(traj) < 3:
        raise ValueError("need at least 3 records")
    t, U = traj.t, traj.U
    h0 = t[1:-1] - t[:-2]
    h1 = t[2:] - t[1:-1]
    dU = (-h1 / (h0 * (h0 + h1)) * U[:-2]
          + (h1 - h0) / (h0 * h1) * U[1:-1]
          + h0 / (h1 * (h0 + h1)) * U[2:])
    return np.abs(dU - traj.balance[1:-1])
