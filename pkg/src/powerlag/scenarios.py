"""Built-in systems with recommended runs and expected behaviour."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import expr as ex
from .expr import ParseContext, parse
from .integrate import IntegratorConfig
from .jets import JetState
from .model import SECOND_ORDER, SECOND_ORDER_CONSTRAINED, THIRD_ORDER, ModelSpec, compile_model

__all__ = ["Scenario", "damped_oscillator", "knife_edge", "parabola_particle",
           "lad_nonrelativistic", "lad_relativistic_free_param", "lad_relativistic_proper",
           "pendulum", "bremsstrahlung_1d", "SCENARIOS", "get", "names",
           "minkowski_dot", "normalized_four_velocity"]

ETA = (-1.0, 1.0, 1.0, 1.0)
NORMALIZATION_TOL = 1e-9


@dataclass
class Scenario:
    name: str
    spec: ModelSpec
    order_class: str
    initial: JetState
    config: IntegratorConfig
    expected: dict = field(default_factory=dict)

    def compile(self, **kwargs):
        return compile_model(self.spec, **kwargs)


def _finish(name, spec, order_class, initial, config, expected=None):
    spec.name = name
    spec.initial = initial
    defaults = IntegratorConfig()
    spec.integrator = {k: getattr(config, k) for k in
                       ("method", "t0", "t1", "dt", "rel_tol", "abs_tol", "beta", "max_steps",
                        "accel_ceiling", "dt_max")
                       if k in ("method", "t0", "t1", "dt") or getattr(config, k) != getattr(defaults, k)}
    return Scenario(name, spec, order_class, initial, config, expected or {})


def damped_oscillator(m=1.0, k=1.0, gamma=0.1, q0=1.0, v0=0.0, t1=10.0) -> Scenario:
    """L = m qd^2/2 - k q^2/2 with viscous R = gamma qd^2/2."""
    if not (m > 0 and k > 0 and gamma >= 0):
        raise ValueError("need m, k > 0 and gamma >= 0")
    spec = ModelSpec(n=1, L="0.5*m*qd0^2 - 0.5*k*q0^2", R="0.5*gamma*qd0^2",
                     params={"m": m, "k": k, "gamma": gamma}, coords=["x"])

    def closed_form(t):
        """Exact x(t) for x(0)=q0, x'(0)=v0 (all damping regimes)."""
        t = np.asarray(t, dtype=float)
        a = gamma / (2 * m)
        w2 = k / m - a * a
        if w2 > 0:
            w = math.sqrt(w2)
            return np.exp(-a * t) * (q0 * np.cos(w * t) + (v0 + a * q0) / w * np.sin(w * t))
        if w2 < 0:
            s = math.sqrt(-w2)
            r1, r2 = -a + s, -a - s
            c1 = (v0 - r2 * q0) / (r1 - r2)
            return c1 * np.exp(r1 * t) + (q0 - c1) * np.exp(r2 * t)
        return np.exp(-a * t) * (q0 + (v0 + a * q0) * t)

    return _finish("damped_oscillator", spec, SECOND_ORDER,
                   JetState(t=0.0, q=[q0], qd=[v0]),
                   IntegratorConfig(t0=0.0, t1=t1, dt=1e-2),
                   {"closed_form": closed_form, "conservative": gamma == 0.0})


def knife_edge(mass=1.0, inertia=1.0, speed=1.0, omega=0.5, steering="0", t1=20.0) -> Scenario:
    """Skate (x, y, theta) with f0 = xd sin(theta) - yd cos(theta).

    ``steering`` is a torque on theta, an expression in t and q. The
    initial velocity is aligned with the blade and the turn rate is
    ``omega``; with zero torque the skate traces a circle of radius
    ``speed/omega`` about (0, speed/omega).
    """
    if not mass > 0:
        raise ValueError("mass must be positive")
    context = ParseContext(3, 1, ("mass", "inertia"))
    spec = ModelSpec(
        n=3, L="0.5*mass*(qd0^2 + qd1^2) + 0.5*inertia*qd2^2",
        constraints=["qd0*sin(q2) - qd1*cos(q2)"],
        Qr=["0", "0", parse(steering, context)],
        params={"mass": mass, "inertia": inertia}, coords=["x", "y", "theta"],
    )
    expected = {"radius": speed / omega if omega else math.inf,
                "center": (0.0, speed / omega) if omega else None}
    return _finish("knife_edge", spec, SECOND_ORDER_CONSTRAINED,
                   JetState(t=0.0, q=[0.0, 0.0, 0.0], qd=[speed, 0.0, omega]),
                   IntegratorConfig(t0=0.0, t1=t1, dt=1e-2, beta=5.0),
                   expected)


# printed equation of motion, residual form RHS - LHS (the sign of X)
PARABOLA_PRINTED_EOM = (
    "-3*mu*b*qd0^2*sgn(qd0) + (2/3)*charge^2*(3*b^2*q0*qd0*qdd0 + (1 + b^2*q0^2)*qddd0)"
    " - m*((1 + b^2*q0^2)*qdd0 + 2*b^2*q0*qd0^2)"
)
PARABOLA_PARAMS = ("m", "charge", "b", "mu")


def parabola_particle(m=1.0, charge=math.sqrt(3.0), b=1.0, mu=0.1,
                      x0=0.5, v0=1.0, a0=None, t1=1.0) -> Scenario:
    """Charged bead on y = b x^2/2 with Coulomb friction and radiation.

    The default initial acceleration solves the friction-only equation at
    the initial point, which keeps the runaway mode small over the run.
    """
    if not (m > 0 and b >= 0 and mu >= 0):
        raise ValueError("need m > 0 and b, mu >= 0")
    spec = ModelSpec(
        n=1, L="0.5*m*(1 + b^2*q0^2)*qd0^2", R="mu*b*abs(qd0)^3",
        PE="-(charge^2/6)*(qdd0^2*(1 + b^2*q0^2) + b^2*qd0^4 + 2*b^2*q0*qd0^2*qdd0)",
        params={"m": m, "charge": charge, "b": b, "mu": mu}, coords=["x"],
    )
    if a0 is None:
        a0 = -(2 * m * b * b * x0 * v0 * v0 + 3 * mu * b * v0 * v0 * np.sign(v0)) / (m * (1 + b * b * x0 * x0))
    order = THIRD_ORDER if charge != 0 else SECOND_ORDER
    initial = JetState(t=0.0, q=[x0], qd=[v0], qdd=[a0] if order == THIRD_ORDER else None)
    return _finish("parabola_particle", spec, order, initial,
                   IntegratorConfig(t0=0.0, t1=t1, dt=1e-3),
                   {"printed_eom": PARABOLA_PRINTED_EOM, "golden": "parabola_particle.txt"})


def lad_nonrelativistic(m=1.0, charge=1.0, phi="0", A=("0", "0", "0"), params=None,
                        a0=(1e-3, 0.0, 0.0), v0=(0.0, 0.0, 0.0), t1=None) -> Scenario:
    """L = m v^2/2 - charge*phi + charge*v.A and PE = -(charge^2/6) a^2.

    ``phi`` and ``A`` are expressions in t, q0..q2 and the names in
    ``params`` (extra parameters such as a field strength).
    """
    extra = dict(params or {})
    names = ("m", "charge") + tuple(extra)
    context = ParseContext(3, 0, names)
    phi_e = parse(phi, context)
    A_e = [parse(a, context) for a in A]
    mm, c = ex.param("m"), ex.param("charge")
    v2 = ex.add(*(ex.power(ex.qd(i), 2) for i in range(3)))
    a2 = ex.add(*(ex.power(ex.qdd(i), 2) for i in range(3)))
    L = ex.add(ex.mul(0.5, mm, v2), ex.neg(ex.mul(c, phi_e)),
               ex.mul(c, ex.add(*(ex.mul(ex.qd(i), A_e[i]) for i in range(3)))))
    PE = ex.mul(-1.0 / 6.0, ex.power(c, 2), a2)
    spec = ModelSpec(n=3, L=L, PE=PE, params={"m": m, "charge": charge, **extra},
                     coords=["x", "y", "z"])
    order = THIRD_ORDER if charge != 0 else SECOND_ORDER
    tau0 = 2 * charge * charge / (3 * m) if charge else math.inf
    if t1 is None:
        t1 = 5 * tau0 if charge else 1.0
    initial = JetState(t=0.0, q=[0.0, 0.0, 0.0], qd=list(v0),
                       qdd=list(a0) if order == THIRD_ORDER else None)
    return _finish("lad_nonrelativistic", spec, order, initial,
                   IntegratorConfig(t0=0.0, t1=t1, dt=1e-3 * max(tau0 if charge else 1.0, 1e-3)),
                   {"runaway_rate": 1 / tau0 if charge else 0.0})


def lad_uniform_field(m=1.0, charge=1.0, E0=0.5, a0=None) -> Scenario:
    """Nonrelativistic LAD in the uniform field E = (E0, 0, 0), phi = -E0 x.

    The default initial acceleration charge*E0/m is the non-runaway
    solution (constant acceleration, zero jerk).
    """
    if a0 is None:
        a0 = (charge * E0 / m, 0.0, 0.0)
    sc = lad_nonrelativistic(m, charge, phi="-E0*q0", params={"E0": E0}, a0=a0)
    sc.name = sc.spec.name = "lad_uniform_field"
    sc.expected["printed_eom"] = [
        "charge*E0 - m*qdd0 + (2/3)*charge^2*qddd0",
        "-m*qdd1 + (2/3)*charge^2*qddd1",
        "-m*qdd2 + (2/3)*charge^2*qddd2",
    ]
    sc.expected["golden"] = "lad_uniform_field.txt"
    return sc


def minkowski_dot(a, b):
    """Expression for a.b with signature (-,+,+,+) on upper-index components."""
    return ex.add(*(ex.mul(ETA[i], a[i], b[i]) for i in range(4)))


def normalized_four_velocity(v):
    """u = gamma (1, v) for a 3-velocity with |v| < 1."""
    v = np.asarray(v, dtype=float)
    g = 1.0 / math.sqrt(1.0 - float(v @ v))
    return np.concatenate([[g], g * v])


def _field_acceleration(u, m, charge, E0):
    """Lorentz-force acceleration for E = E0 along x: a = (q/m) F u."""
    return (charge / m) * E0 * np.array([u[1], u[0], 0.0, 0.0])


def _potential(A, context):
    return [parse(a, context) for a in A]


def _initial_relativistic(m, charge, E0, v, a):
    u = normalized_four_velocity(v)
    if a is None:
        a = _field_acceleration(u, m, charge, E0)
    a = np.asarray(a, dtype=float)
    eta = np.array(ETA)
    if abs(float(eta @ (a * u))) > NORMALIZATION_TOL:
        raise ValueError("initial acceleration must be orthogonal to u")
    return u, a


def lad_relativistic_free_param(m=1.0, charge=3.0, A=("E0*q1", "0", "0", "0"), E0=0.05,
                                v=(0.3, 0.0, 0.0), a=None, t1=10.0) -> Scenario:
    """Arbitrary-parametrization form over x^mu(s).

    L = -m sqrt(-x'.x') + charge A_mu x'^mu and PE = -(charge^2/6) a.a with
    the covariant acceleration a_mu = g^2 x''_mu + g^4 (x'.x'') x'_mu,
    g = (-x'.x')^(-1/2). ``A`` lists lower-index potentials.
    """
    context = ParseContext(4, 0, ("m", "charge", "E0"))
    A_e = _potential(A, context)
    mm, c = ex.param("m"), ex.param("charge")
    xp = [ex.qd(i) for i in range(4)]
    xpp = [ex.qdd(i) for i in range(4)]
    w = ex.neg(minkowski_dot(xp, xp))
    g2 = ex.power(w, -1.0)
    g4 = ex.power(w, -2.0)
    xpxpp = minkowski_dot(xp, xpp)
    # upper-index a^mu; the metric is diagonal so raising commutes with the formula
    acc = [ex.add(ex.mul(g2, xpp[i]), ex.mul(g4, xpxpp, xp[i])) for i in range(4)]
    L = ex.add(ex.mul(-1.0, mm, ex.power(w, 0.5)),
               ex.mul(c, ex.add(*(ex.mul(A_e[i], xp[i]) for i in range(4)))))
    PE = ex.mul(-1.0 / 6.0, ex.power(c, 2), minkowski_dot(acc, acc))
    # X is blind to the jerk component along x'; holding x'.x' fixed keeps
    # the curve on the proper-time parametrization it starts with
    spec = ModelSpec(n=4, L=L, PE=PE, params={"m": m, "charge": charge, "E0": E0},
                     coords=["x0", "x1", "x2", "x3"], homogeneous_pe=True,
                     gauge=minkowski_dot(xp, xp))
    u, a0 = _initial_relativistic(m, charge, E0, v, a)
    return _finish("lad_relativistic_free_param", spec, THIRD_ORDER,
                   JetState(t=0.0, q=[0.0, 0.0, 0.0, 0.0], qd=u, qdd=a0),
                   IntegratorConfig(t0=0.0, t1=t1, dt=1e-2),
                   {"normalized": True})


def lad_relativistic_proper(m=1.0, charge=3.0, A=("E0*q1", "0", "0", "0"), E0=0.05,
                            v=(0.3, 0.0, 0.0), a=None, t1=10.0) -> Scenario:
    """Proper-time form: L = (m/2) u.u + charge A.u, PE = -(charge^2/6) a.a/(u.u)^2."""
    context = ParseContext(4, 0, ("m", "charge", "E0"))
    A_e = _potential(A, context)
    mm, c = ex.param("m"), ex.param("charge")
    u = [ex.qd(i) for i in range(4)]
    acc = [ex.qdd(i) for i in range(4)]
    uu = minkowski_dot(u, u)
    L = ex.add(ex.mul(0.5, mm, uu), ex.mul(c, ex.add(*(ex.mul(A_e[i], u[i]) for i in range(4)))))
    PE = ex.mul(-1.0 / 6.0, ex.power(c, 2), minkowski_dot(acc, acc), ex.power(uu, -2.0))
    spec = ModelSpec(n=4, L=L, PE=PE, params={"m": m, "charge": charge, "E0": E0},
                     coords=["x0", "x1", "x2", "x3"], homogeneous_pe=True)
    u0, a0 = _initial_relativistic(m, charge, E0, v, a)
    return _finish("lad_relativistic_proper", spec, THIRD_ORDER if charge else SECOND_ORDER,
                   JetState(t=0.0, q=[0.0, 0.0, 0.0, 0.0], qd=u0, qdd=a0 if charge else None),
                   IntegratorConfig(t0=0.0, t1=t1, dt=1e-2),
                   {"normalized": True})


def check_normalized(initial: JetState, tol=NORMALIZATION_TOL):
    """Reject four-velocity data off the shell u.u = -1, a.u = 0."""
    eta = np.array(ETA)
    uu = float(eta @ (initial.qd * initial.qd))
    if abs(uu + 1.0) > tol:
        raise ValueError(f"initial u.u = {uu!r}, expected -1")
    if initial.qdd is not None:
        au = float(eta @ (initial.qdd * initial.qd))
        if abs(au) > tol:
            raise ValueError(f"initial a.u = {au!r}, expected 0")


def pendulum(m=1.0, g=9.81, length=1.0, theta0=0.5, t1=5.0) -> Scenario:
    """Planar pendulum with the rod enforced through the differentiated
    holonomic constraint f0 = x xd + y yd."""
    spec = ModelSpec(n=2, L="0.5*m*(qd0^2 + qd1^2) - m*g*q1", constraints=["q0*qd0 + q1*qd1"],
                     params={"m": m, "g": g, "length": length}, coords=["x", "y"])
    x0, y0 = length * math.sin(theta0), -length * math.cos(theta0)
    return _finish("pendulum", spec, SECOND_ORDER_CONSTRAINED,
                   JetState(t=0.0, q=[x0, y0], qd=[0.0, 0.0]),
                   IntegratorConfig(t0=0.0, t1=t1, dt=1e-2, beta=5.0),
                   {"length": length})


def bremsstrahlung_1d(m=1.0, gamma=1.0, mu=1.0, t1=5.0) -> Scenario:
    """One-dimensional P = m a v - gamma v^2/2 - mu a^2/2."""
    spec = ModelSpec(n=1, L="0.5*m*qd0^2", R="0.5*gamma*qd0^2", PE="-0.5*mu*qdd0^2",
                     params={"m": m, "gamma": gamma, "mu": mu}, coords=["x"])
    return _finish("bremsstrahlung_1d", spec, THIRD_ORDER,
                   JetState(t=0.0, q=[0.0], qd=[1.0], qdd=[-0.5]),
                   IntegratorConfig(t0=0.0, t1=t1, dt=1e-2),
                   {})


SCENARIOS = {
    "damped_oscillator": damped_oscillator,
    "knife_edge": knife_edge,
    "parabola_particle": parabola_particle,
    "lad_nonrelativistic": lad_nonrelativistic,
    "lad_uniform_field": lad_uniform_field,
    "lad_relativistic_free_param": lad_relativistic_free_param,
    "lad_relativistic_proper": lad_relativistic_proper,
    "pendulum": pendulum,
    "bremsstrahlung_1d": bremsstrahlung_1d,
}


def names() -> list:
    return sorted(SCENARIOS)


def get(name: str, **kwargs) -> Scenario:
    try:
        builder = SCENARIOS[name]
    except KeyError:
        raise KeyError(f"unknown scenario {name!r}; available: {', '.join(names())}") from None
    return builder(**kwargs)
