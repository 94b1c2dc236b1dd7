"""Numerical certification of the structural identities.

Four checks:

* ``check_identity``: for a Lagrangian L, the power form of the covector
  applied to dL/dt equals the Euler-Lagrange expression of L.
* ``check_covariance``: X and dP/dqdd transform with the transposed
  Jacobian of a point transformation q~(t, q).
* ``check_homogeneity``: P_E(t, q, s qd, s^2 qdd) = P_E(t, q, qd, qdd).
* ``check_variational``: the first variation of the double integral of P
  under a narrow bump reduces to X + Y (b - t) at leading order.

Every check draws from its own generator seeded by (seed, check name), so
reports are reproducible and independent of evaluation order.
"""
from __future__ import annotations

import math
import zlib
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from numpy.polynomial import Polynomial
from scipy.integrate import cumulative_simpson, simpson

from . import expr as ex
from .expr import Expr, ParseContext, partial, substitute, total_time_derivative as D
from .eom import eval_X, eval_Y
from .jets import JET_FIELDS, JetState
from .model import CompiledModel, JetFunction, ModelError, ModelSpec, compile_model

__all__ = ["ChartMap", "ChartError", "CheckReport", "chart_library", "identity_chart",
           "check_identity", "transform_jet", "check_covariance", "check_homogeneity",
           "check_variational", "variational_halving", "jet_sampler", "rng_for",
           "IDENTITY_TOL", "COVARIANCE_TOL", "HOMOGENEITY_TOL", "VARIATIONAL_TOL"]

IDENTITY_TOL = 1e-10
COVARIANCE_TOL = 1e-8
HOMOGENEITY_TOL = 1e-12
VARIATIONAL_TOL = 0.05
ROUND_TRIP_TOL = 1e-10
SCALES = (0.5, 2.0, 3.7)
BOX = 2.0
QUADRATURE_NODES = 401
MAX_REDRAWS = 200


class ChartError(ValueError):
    """A chart map whose inverse does not undo the forward map."""


def rng_for(seed: int, name: str) -> np.random.Generator:
    return np.random.default_rng([int(seed), zlib.crc32(name.encode())])


def _rel(a, b):
    a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    scale = np.maximum(1.0, np.maximum(np.abs(a), np.abs(b)))
    return float(np.max(np.abs(a - b) / scale)) if a.size else 0.0


@dataclass
class CheckReport:
    name: str
    samples: int
    max_deviation: float
    tolerance: float
    witness: dict | None = None
    seed: int | None = None
    details: dict = field(default_factory=dict)
    _evaluate: Callable | None = field(default=None, repr=False, compare=False)

    @property
    def passed(self) -> bool:
        return bool(self.max_deviation <= self.tolerance)

    def recheck(self) -> float:
        """Re-evaluate the deviation at the stored witness."""
        if self._evaluate is None or self.witness is None:
            raise ValueError(f"report {self.name!r} has no witness to re-evaluate")
        return self._evaluate(self.witness)

    def to_dict(self) -> dict:
        return {"name": self.name, "samples": self.samples,
                "max_deviation": self.max_deviation, "tolerance": self.tolerance,
                "passed": self.passed, "seed": self.seed,
                "witness": _plain(self.witness), "details": _plain(self.details)}


def _plain(value):
    if isinstance(value, JetState):
        out = {"t": value.t}
        for name in JET_FIELDS + ("mu",):
            v = getattr(value, name)
            if v is not None:
                out[name] = v.tolist()
        return out
    if isinstance(value, dict):
        return {str(k): _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, (np.floating, np.integer)):
        return value.item()
    return value


def _scan(name, samples, seed, tolerance, draw, evaluate, details=None):
    """Evaluate ``samples`` valid draws and keep the worst one.

    Draws whose evaluation leaves the expressions' domain (or is not finite)
    are replaced, up to ``MAX_REDRAWS`` times the sample count.
    """
    rng = rng_for(seed, name)
    worst, witness, taken = -1.0, None, 0
    for _ in range(MAX_REDRAWS * max(samples, 1)):
        if taken >= samples:
            break
        point = draw(rng)
        try:
            dev = evaluate(point)
        except (ex.EvaluationError, ZeroDivisionError, OverflowError):
            continue
        if not math.isfinite(dev):
            continue
        taken += 1
        if dev > worst:
            worst, witness = dev, point
    if taken < samples:
        raise ValueError(f"{name}: only {taken} of {samples} samples fell inside the domain")
    return CheckReport(name, taken, max(worst, 0.0), tolerance, witness, seed,
                       details or {}, evaluate)


# jets


def jet_sampler(n: int, m: int = 0, *, box: float = BOX, q_box=None, t_box=None,
                timelike: bool = False, order: int = 4):
    """Uniform random jets; ``timelike`` draws qd with qd.qd < 0 in (-,+,+,+)."""
    q_lo, q_hi = (np.full(n, -box), np.full(n, box)) if q_box is None else \
        (np.array([lo for lo, _ in q_box]), np.array([hi for _, hi in q_box]))
    t_lo, t_hi = (-box, box) if t_box is None else t_box

    def draw(rng):
        jets = {"q": rng.uniform(q_lo, q_hi)}
        for name in JET_FIELDS[1:order + 1]:
            jets[name] = rng.uniform(-box, box, n)
        if timelike:
            spatial = rng.uniform(-1.0, 1.0, n - 1)
            jets["qd"] = np.concatenate([[rng.uniform(1.0, 1.5) * math.sqrt(1.0 + spatial @ spatial)],
                                         spatial])
        return JetState(t=rng.uniform(t_lo, t_hi), mu=rng.uniform(-box, box, m) if m else None,
                        **jets)

    return draw


# charts


def _explicit_pushes(phi, n):
    """Velocity and acceleration of q~ = phi(t, q) by the chain rule."""
    q = [ex.q(k) for k in range(n)]
    qd = [ex.qd(k) for k in range(n)]
    qdd = [ex.qdd(k) for k in range(n)]
    vel, acc = [], []
    for p in phi:
        dq = [partial(p, s) for s in q]
        dt = partial(p, ex.t)
        vel.append(ex.add(*(ex.mul(dq[k], qd[k]) for k in range(n)), dt))
        acc.append(ex.add(
            *(ex.mul(partial(dq[j], q[k]), qd[j], qd[k]) for j in range(n) for k in range(n)),
            *(ex.mul(2.0, partial(dq[k], ex.t), qd[k]) for k in range(n)),
            partial(dt, ex.t),
            *(ex.mul(dq[k], qdd[k]) for k in range(n)),
        ))
    return vel, acc


@dataclass(eq=False)
class ChartMap:
    """Point transformation q~ = forward(t, q) with inverse q = inverse(t, q~).

    Both directions are written in the ``q`` symbols; in ``inverse`` they
    stand for the new coordinates. ``q_box`` and ``t_box`` bound the sampled
    region on which the map is smooth and invertible.
    """

    name: str
    forward: tuple
    inverse: tuple
    q_box: tuple
    t_box: tuple = (-BOX, BOX)
    _cache: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        n = len(self.forward)
        context = ParseContext(n, 0, ())
        conv = lambda e: ex.parse(e, context) if isinstance(e, str) else ex.as_expr(e)
        self.forward = tuple(conv(e) for e in self.forward)
        self.inverse = tuple(conv(e) for e in self.inverse)
        if len(self.inverse) != n:
            raise ChartError("forward and inverse maps differ in dimension")
        if self.q_box is None:
            self.q_box = ((-BOX, BOX),) * n
        self.q_box = tuple((float(lo), float(hi)) for lo, hi in self.q_box)
        for e in self.forward + self.inverse:
            if any(s.kind not in ("t", "q") for s in e.free):
                raise ChartError("chart maps may depend on t and q only")

    @property
    def n(self) -> int:
        return len(self.forward)

    def pushes(self, which: str = "forward") -> list:
        """[q~, q~', q~'', q~''', q~''''] as expressions in the jet symbols."""
        key = ("pushes", which)
        if key not in self._cache:
            phi = list(getattr(self, which))
            vel, acc = _explicit_pushes(phi, self.n)
            jerk = [D(a) for a in acc]
            snap = [D(j) for j in jerk]
            self._cache[key] = [phi, vel, acc, jerk, snap]
        return self._cache[key]

    def function(self, key, build):
        fn = self._cache.get(key)
        if fn is None:
            fn = self._cache[key] = JetFunction(build(), self.n, 0)
        return fn

    def jacobian(self, t, q) -> np.ndarray:
        fn = self.function("jacobian", lambda: [partial(p, ex.q(k)) for p in self.forward
                                                 for k in range(self.n)])
        return fn.raw(t, [q]).reshape(self.n, self.n)

    def apply(self, t, q, which="forward") -> np.ndarray:
        return self.function(which, lambda: list(getattr(self, which))).raw(t, [q])

    def round_trip(self, samples: int = 100, seed: int = 0) -> CheckReport:
        lo = np.array([a for a, _ in self.q_box])
        hi = np.array([b for _, b in self.q_box])

        def draw(rng):
            return {"t": rng.uniform(*self.t_box), "q": rng.uniform(lo, hi)}

        def evaluate(w):
            back = self.apply(w["t"], self.apply(w["t"], w["q"]), "inverse")
            return _rel(back, w["q"])

        return _scan(f"round_trip:{self.name}", samples, seed, ROUND_TRIP_TOL, draw, evaluate)

    def compose(self, other: "ChartMap") -> "ChartMap":
        """The chart ``other`` after ``self``."""
        if other.n != self.n:
            raise ChartError("cannot compose charts of different dimension")
        fwd = {ex.q(k): e for k, e in enumerate(self.forward)}
        inv = {ex.q(k): e for k, e in enumerate(other.inverse)}
        return ChartMap(f"{other.name}.{self.name}",
                        tuple(substitute(e, fwd) for e in other.forward),
                        tuple(substitute(e, inv) for e in self.inverse),
                        self.q_box, _intersect(self.t_box, other.t_box))


def _intersect(a, b):
    return (max(a[0], b[0]), min(a[1], b[1]))


def identity_chart(n: int) -> ChartMap:
    qs = tuple(ex.q(k) for k in range(n))
    return ChartMap("identity", qs, qs, ((-BOX, BOX),) * n)


def _sinh(x):
    return ex.mul(0.5, ex.sub(ex.func("exp", x), ex.func("exp", ex.neg(x))))


def _asinh(x):
    return ex.func("log", ex.add(x, ex.power(ex.add(ex.power(x, 2), 1.0), 0.5)))


def _cubic_inverse(y):
    """Real root of x^3 + t x = y for t > 0, in a cancellation-free form."""
    r = ex.mul(0.5, ex.func("abs", y))
    disc = ex.power(ex.add(ex.power(r, 2), ex.mul(1.0 / 27.0, ex.power(ex.t, 3))), 0.5)
    u = ex.power(ex.add(r, disc), 1.0 / 3.0)
    return ex.mul(ex.func("sgn", y), ex.sub(u, ex.div(ex.t, ex.mul(3.0, u))))


def chart_library(n: int) -> list:
    """Fixed nonlinear charts: translation, scaling, sinh with a shear,
    cubic-plus-time and (for n >= 2) a time-dependent rotation."""
    q = [ex.q(k) for k in range(n)]
    box = ((-BOX, BOX),) * n
    shift = [0.5 + 0.25 * k for k in range(n)]
    scale = [1.5 + 0.5 * k for k in range(n)]
    charts = [
        ChartMap("translation", tuple(ex.add(q[k], shift[k]) for k in range(n)),
                 tuple(ex.sub(q[k], shift[k]) for k in range(n)), box),
        ChartMap("scaling", tuple(ex.mul(scale[k], q[k]) for k in range(n)),
                 tuple(ex.mul(1.0 / scale[k], q[k]) for k in range(n)), box),
    ]
    # q~_k = sinh(q_k) + q_{k-1}/2, inverted one coordinate at a time
    fwd, inv = [], []
    for k in range(n):
        fwd.append(_sinh(q[k]) if k == 0 else ex.add(_sinh(q[k]), ex.mul(0.5, q[k - 1])))
        inv.append(_asinh(q[k]) if k == 0 else _asinh(ex.sub(q[k], ex.mul(0.5, inv[k - 1]))))
    charts.append(ChartMap("sinh", tuple(fwd), tuple(inv), box))
    charts.append(ChartMap(
        "cubic_time", tuple(ex.add(ex.power(q[k], 3), ex.mul(ex.t, q[k])) for k in range(n)),
        tuple(_cubic_inverse(q[k]) for k in range(n)), box, (0.5, BOX)))
    if n >= 2:
        angle = ex.add(0.3, ex.mul(0.7, ex.t))
        c, s = ex.func("cos", angle), ex.func("sin", angle)
        fwd = [ex.sub(ex.mul(c, q[0]), ex.mul(s, q[1])), ex.add(ex.mul(s, q[0]), ex.mul(c, q[1]))]
        inv = [ex.add(ex.mul(c, q[0]), ex.mul(s, q[1])), ex.sub(ex.mul(c, q[1]), ex.mul(s, q[0]))]
        charts.append(ChartMap("rotation", tuple(fwd + q[2:]), tuple(inv + q[2:]), box))
    return charts


def transform_jet(s: JetState, chart: ChartMap) -> JetState:
    """Push a jet through ``chart``; multiplier rates are scalars and carry over."""
    if s.n != chart.n:
        raise ChartError(f"jet has {s.n} coordinates, chart has {chart.n}")
    order = s.order
    if order > 4:
        raise ex.OrderOverflowError("jet order exceeds 4")
    jets = [s.jet(k) for k in range(order + 1)]
    pushes = chart.pushes()
    out = {}
    for k in range(order + 1):
        fn = chart.function(("push", k), lambda k=k: pushes[k])
        out[JET_FIELDS[k]] = fn.raw(s.t, jets)
    return JetState(t=s.t, mu=s.mu, **out)


# identity


def _order3_sampler(n, box=BOX):
    return jet_sampler(n, 0, box=box, order=3)


def _infer_n(*exprs):
    top = [s.index for e in exprs for s in e.free if s.kind in ex.COORD_KINDS]
    return max(top, default=0) + 1


def _bind_params(e, params):
    return substitute(e, {ex.param(k): v for k, v in (params or {}).items()})


def check_identity(L: Expr | str, samples: int = 100, seed: int = 0, *, n: int | None = None,
                   params: dict | None = None, tolerance: float = IDENTITY_TOL) -> CheckReport:
    """Compare d/dqd(dL/dt) - 2 d/dt d/dqdd(dL/dt) with dL/dq - d/dt dL/dqd."""
    if isinstance(L, str):
        L = ex.parse(L, ParseContext(n or 3, 0, tuple(params or ())))
    L = _bind_params(L, params)
    if ex.max_order(L) > 1:
        raise ModelError("L must not depend on accelerations")
    n = n or _infer_n(L)
    P = D(L)
    lhs = [ex.sub(partial(P, ex.qd(k)), ex.mul(2.0, D(partial(P, ex.qdd(k))))) for k in range(n)]
    rhs = [ex.sub(partial(L, ex.q(k)), D(partial(L, ex.qd(k)))) for k in range(n)]
    fn = JetFunction(lhs + rhs, n, 0)

    def evaluate(jet):
        values = fn(jet)
        return _rel(values[:n], values[n:])

    return _scan("identity", samples, seed, tolerance, _order3_sampler(n), evaluate)


# covariance


def _covectors(P, n, post):
    mom = [post(partial(P, ex.qdd(k))) for k in range(n)]
    X = [post(ex.sub(partial(P, ex.qd(k)), ex.mul(2.0, D(mom[k])))) for k in range(n)]
    try:
        Y = [post(ex.add(ex.sub(partial(P, ex.q(k)), D(partial(P, ex.qd(k)))), D(D(mom[k]))))
             for k in range(n)]
    except ex.OrderOverflowError:
        Y = None
    return X, mom, Y


def transformed_power(cm: CompiledModel, chart: ChartMap) -> Expr:
    """P~(t, q~, ...) = P(t, q(t, q~), ...) by substituting the inverse chart."""
    pushes = chart.pushes("inverse")
    mapping = {}
    for k in range(cm.n):
        mapping[ex.q(k)] = pushes[0][k]
        mapping[ex.qd(k)] = pushes[1][k]
        mapping[ex.qdd(k)] = pushes[2][k]
    return substitute(cm.P, mapping)


def check_covariance(model: ModelSpec | CompiledModel, chart: ChartMap, samples: int = 50,
                     seed: int = 0, *, sampler=None, timelike: bool = False,
                     tolerance: float = COVARIANCE_TOL) -> CheckReport:
    """Verify X = J^T X~, dP/dqdd = J^T dP~/dq~dd (and Y = J^T Y~ when Y exists)."""
    cm = compile_model(model) if isinstance(model, ModelSpec) else model
    n, m = cm.n, cm.m
    if chart.n != n:
        raise ChartError(f"chart {chart.name!r} has dimension {chart.n}, model has {n}")
    trip = chart.round_trip(seed=seed)
    if not trip.passed:
        raise ChartError(f"chart {chart.name!r} fails its round trip "
                         f"(deviation {trip.max_deviation:.3g})")
    X, mom, Y = _covectors(cm.P, n, cm.post)
    Xt, momt, Yt = _covectors(transformed_power(cm, chart), n, cm.post)
    with_y = Y is not None and Yt is not None
    original = cm.function(("covariance", with_y), X + mom + (Y if with_y else []))
    transformed = JetFunction(Xt + momt + (Yt if with_y else []), n, m,
                              cm.param_symbols, [cm.params[s.name] for s in cm.param_symbols])
    blocks = 3 if with_y else 2
    if sampler is None:
        sampler = jet_sampler(n, m, q_box=chart.q_box, t_box=chart.t_box, timelike=timelike)

    def evaluate(jet):
        J = chart.jacobian(jet.t, jet.q)
        a = original(jet).reshape(blocks, n)
        b = transformed(transform_jet(jet, chart)).reshape(blocks, n) @ J
        return _rel(a, b)

    report = _scan(f"covariance:{chart.name}", samples, seed, tolerance, sampler, evaluate)
    report.details["covectors"] = ["X", "momentum", "Y"][:blocks]
    return report


# homogeneity


def check_homogeneity(PE: Expr | str, samples: int = 100, seed: int = 0, *, n: int | None = None,
                      params: dict | None = None, tolerance: float = HOMOGENEITY_TOL) -> CheckReport:
    """P_E(t, q, s qd, s^2 qdd) against P_E, plus dPE/dqd.qd + 2 dPE/dqdd.qdd = 0.

    The witness records the scale and both sides, so the observed scaling
    exponent of a failing P_E can be read off it.
    """
    if isinstance(PE, str):
        PE = ex.parse(PE, ParseContext(n or 3, 0, tuple(params or ())))
    PE = _bind_params(PE, params)
    n = n or _infer_n(PE)
    euler = ex.add(*(ex.mul(partial(PE, ex.qd(k)), ex.qd(k)) for k in range(n)),
                   *(ex.mul(2.0, partial(PE, ex.qdd(k)), ex.qdd(k)) for k in range(n)))
    parts = [ex.mul(partial(PE, ex.qd(k)), ex.qd(k)) for k in range(n)] + \
            [ex.mul(2.0, partial(PE, ex.qdd(k)), ex.qdd(k)) for k in range(n)]
    fn = JetFunction([PE, euler] + parts, n, 0)
    draw_jet = jet_sampler(n, 0, order=2)

    def draw(rng):
        return {"jet": draw_jet(rng), "s": float(rng.choice(SCALES))}

    def evaluate(w):
        jet, s = w["jet"], w["s"]
        base = fn(jet)
        scaled = fn(jet.replace(qd=s * jet.qd, qdd=s * s * jet.qdd))[0]
        w["lhs"], w["rhs"] = float(scaled), float(base[0])
        euler_scale = max(1.0, float(np.max(np.abs(base[2:]))) if n else 1.0)
        return max(_rel(scaled, base[0]), abs(float(base[1])) / euler_scale)

    return _scan("homogeneity", samples, seed, tolerance, draw, evaluate)


# variational


def _bump(eps):
    """C^2 bump of unit integral on |x| < eps with its first two derivatives."""
    shape = Polynomial([1.0, 0.0, -1.0]) ** 3
    norm = 1.0 / (eps * float(shape.integ()(1.0) - shape.integ()(-1.0)))
    d1, d2 = shape.deriv(1), shape.deriv(2)

    def eta(x):
        y = np.asarray(x, dtype=float) / eps
        inside = np.abs(y) < 1.0
        return (norm * np.where(inside, shape(y), 0.0),
                norm / eps * np.where(inside, d1(y), 0.0),
                norm / eps ** 2 * np.where(inside, d2(y), 0.0))

    return eta


def _taylor_curve(s: JetState, order: int = 3):
    """Polynomial curve through ``s`` matching its jets up to ``order``."""
    coeffs = []
    for k in range(order + 1):
        value = getattr(s, JET_FIELDS[k])
        coeffs.append(np.zeros(s.n) if value is None else value / math.factorial(k))
    coeffs = np.array(coeffs)

    def jets(t):
        dt = np.asarray(t, dtype=float) - s.t
        out = []
        for d in range(3):
            total = 0.0
            for k in range(d, order + 1):
                total = total + np.multiply.outer(dt ** (k - d), coeffs[k]) * \
                    (math.factorial(k) / math.factorial(k - d))
            out.append(total)
        return out

    return jets


def _variation(cm, s, v, width, eps):
    n = cm.n
    v = np.asarray(v, dtype=float)
    if v.shape != (n,):
        raise ValueError(f"direction must have {n} components")
    a, b = s.t - width / 2.0, s.t + width / 2.0
    if not 0 < eps < width / 2.0:
        raise ValueError("the mollifier width must be positive and inside (a, b)")
    grads = cm.function("variational_grads",
                        [cm.post(partial(cm.P, ex.sym(kind, k)))
                         for kind in ("q", "qd", "qdd") for k in range(n)])
    curve = _taylor_curve(s)
    # dP vanishes off the bump, so the nodes cover its support and the tail
    # up to b contributes inner(tbar + eps) * (b - tbar - eps) exactly
    nodes = np.linspace(s.t - eps, s.t + eps, QUADRATURE_NODES)
    q, qd, qdd = curve(nodes)
    eta, deta, ddeta = _bump(eps)(nodes - s.t)
    dP = np.empty(len(nodes))
    for i, t in enumerate(nodes):
        g = grads.raw(t, [q[i], qd[i], qdd[i]], s.mu).reshape(3, n)
        dP[i] = eps * (g[0] @ v * eta[i] + g[1] @ v * deta[i] + g[2] @ v * ddeta[i])
    if not np.all(np.isfinite(dP)):
        raise ValueError("variation of P is not finite on the quadrature grid")
    inner = cumulative_simpson(dP, x=nodes, initial=0.0)
    dI = float(simpson(inner, x=nodes) + inner[-1] * (b - nodes[-1]))
    # the reference jet needs qddd for X and qdddd for Y
    ref = s.replace(qddd=s.qddd if s.qddd is not None else np.zeros(n), qdddd=np.zeros(n))
    X = float(eval_X(cm, ref).components @ v)
    Y = float(eval_Y(cm, ref).components @ v)
    return dI / eps, X, Y, b - s.t


def check_variational(cm: CompiledModel, s: JetState, v: Sequence[float],
                      widths=(0.2, 0.02), *, tolerance: float = VARIATIONAL_TOL) -> CheckReport:
    """Leading-order first variation of the double integral of P.

    The reference curve is the cubic Taylor polynomial of ``s`` (missing
    jets count as zero); the variation is eps v eta_eps(t - tbar) with tbar
    the midpoint of [a, b]. Compares dI/eps with v.X + v.Y (b - tbar).
    """
    width, eps = widths
    lhs, X, Y, arm = _variation(cm, s, v, width, eps)
    rhs = X + Y * arm
    witness = {"jet": s, "v": list(map(float, v)), "widths": (width, eps)}

    def evaluate(w):
        l, x, y, r = _variation(cm, w["jet"], w["v"], *w["widths"])
        return _rel(l, x + y * r)

    return CheckReport("variational", 1, _rel(lhs, rhs), tolerance, witness, None,
                       {"dI_over_eps": lhs, "X_term": X, "Y_term": Y * arm}, evaluate)


def variational_halving(cm: CompiledModel, s: JetState, v: Sequence[float],
                        widths=(0.2, 0.02), *, tolerance: float = VARIATIONAL_TOL) -> CheckReport:
    """Halving b - a (and the bump with it) halves |dI/eps - v.X|.

    The deviation is |ratio - 1/2|.
    """
    width, eps = widths
    big, X, Y, _ = _variation(cm, s, v, width, eps)
    if Y == 0.0:
        raise ValueError("the Y-term vanishes; pick a curve and model with Y != 0")
    small, _, _, _ = _variation(cm, s, v, width / 2.0, eps / 2.0)
    if big == X:
        raise ValueError("the Y-term vanishes; pick a curve and model with Y != 0")
    ratio = abs(small - X) / abs(big - X)
    witness = {"jet": s, "v": list(map(float, v)), "widths": (width, eps)}

    def evaluate(w):
        b_, x_, _, _ = _variation(cm, w["jet"], w["v"], *w["widths"])
        s_, _, _, _ = _variation(cm, w["jet"], w["v"], w["widths"][0] / 2, w["widths"][1] / 2)
        return abs(abs(s_ - x_) / abs(b_ - x_) - 0.5)

    return CheckReport("variational_halving", 1, abs(ratio - 0.5), tolerance, witness, None,
                       {"ratio": ratio}, evaluate)
