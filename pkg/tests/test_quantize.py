import math

import numpy as np
import pytest

from powerlag import expr as ex, scenarios
from powerlag.eom import DegenerateDynamicsError
from powerlag.integrate import simulate
from powerlag.jets import JetState
from powerlag.model import ModelError, compile_power
from powerlag.quantize import (LegendreState, SpectrumParams, canonical_rhs, canonical_trajectory,
                               legendre_W, momenta, spectrum_Wn)

from helpers import rel_close


def brems(m=1.0, gamma=1.0, mu=1.0):
    return scenarios.bremsstrahlung_1d(m=m, gamma=gamma, mu=mu).compile()


def quartic():
    """A momentum map that is not linear, so Newton needs several steps."""
    P = ex.parse("qd0*qdd0 - 0.5*qdd0^2 - 0.1*qdd0^4 + sin(q0)*qdd0 - t*qd0^2", ex.ParseContext(1))
    return compile_power(P, 1)


def test_negligible_mass_example():
    cm = brems(m=0.0)
    W, qdd = legendre_W(cm, LegendreState(0.0, [0.0], [2.0], [3.0]))
    assert qdd[0] == pytest.approx(-3.0)
    # W = gamma v^2 / 2 - p^2 / (2 mu)
    assert W == pytest.approx(0.5 * 4 - 9 / 2)
    dqd, dp = canonical_rhs(cm, LegendreState(0.0, [0.0], [2.0], [3.0]))
    assert dqd[0] == pytest.approx(-3.0) and dp[0] == pytest.approx(-1.0)


def test_massive_momentum_map():
    cm = brems(m=1.5, mu=2.0)
    s = JetState(t=0.0, q=[0.0], qd=[2.0], qdd=[0.25])
    assert momenta(cm, s)[0] == pytest.approx(1.5 * 2.0 - 2.0 * 0.25)
    _, qdd = legendre_W(cm, LegendreState(0.0, [0.0], [2.0], [1.5 * 2.0 - 2.0 * 0.25]))
    assert qdd[0] == pytest.approx(0.25, abs=1e-15)


@pytest.mark.parametrize("make", [brems, quartic,
                                  lambda: scenarios.lad_relativistic_proper().compile(),
                                  lambda: scenarios.parabola_particle().compile()])
def test_round_trip_and_involution(make):
    cm = make()
    rng = np.random.default_rng(8)
    n = cm.n
    for _ in range(50):
        s = JetState(t=rng.uniform(-1, 1), q=rng.uniform(-1, 1, n), qd=rng.uniform(-1, 1, n),
                     qdd=rng.uniform(-1, 1, n))
        if n == 4:
            s = s.replace(qd=scenarios.normalized_four_velocity(rng.uniform(-0.5, 0.5, 3)))
        p = momenta(cm, s)
        W, qdd = legendre_W(cm, LegendreState(s.t, s.q, s.qd, p))
        assert all(rel_close(a, b, 1e-10) for a, b in zip(qdd, s.qdd))
        assert all(rel_close(a, b, 1e-10) for a, b in zip(momenta(cm, s.replace(qdd=qdd)), p))
        P = cm.function("P_only", [cm.P])(s)[0]
        assert rel_close(p @ qdd - W, P, 1e-10)


def envelope_fd(cm, s, which, h=1e-6):
    def W_at(**kw):
        st = LegendreState(kw.get("t", s.t), kw.get("q", s.q), kw.get("qd", s.qd), kw.get("p", s.p))
        return legendre_W(cm, st)[0]

    if which == "t":
        return (W_at(t=s.t + h) - W_at(t=s.t - h)) / (2 * h)
    base = getattr(s, which)
    return (W_at(**{which: base + h}) - W_at(**{which: base - h})) / (2 * h)


def test_envelope_identities():
    cm = quartic()
    s = LegendreState(0.3, [0.4], [-0.7], [0.9])
    _, qdd = legendre_W(cm, s)
    jet = JetState(t=s.t, q=s.q, qd=s.qd, qdd=qdd)
    grad = lambda var: cm.function(("grad", var.name), [ex.partial(cm.P, var)])(jet)[0]
    assert envelope_fd(cm, s, "p") == pytest.approx(qdd[0], rel=1e-8)
    assert envelope_fd(cm, s, "qd") == pytest.approx(-grad(ex.qd(0)), rel=1e-8)
    assert envelope_fd(cm, s, "q") == pytest.approx(-grad(ex.q(0)), rel=1e-8)
    assert envelope_fd(cm, s, "t") == pytest.approx(-grad(ex.t), rel=1e-8)


def test_canonical_rhs_carries_the_half():
    cm = quartic()
    s = LegendreState(0.3, [0.4], [-0.7], [0.9])
    _, half = canonical_rhs(cm, s)
    _, full = canonical_rhs(cm, s, factor=1.0)
    assert full[0] == 2 * half[0]
    # dp/dt = -1/2 dW/dqd
    assert half[0] == pytest.approx(-0.5 * envelope_fd(cm, s, "qd"), rel=1e-8)


def direct_and_canonical(factor):
    sc = scenarios.bremsstrahlung_1d()
    cm = sc.compile()
    traj = simulate(cm, sc.initial, sc.config.with_overrides(t1=5.0, rel_tol=1e-12, abs_tol=1e-13))
    canon = canonical_trajectory(cm, sc.initial, traj.t, factor=factor)
    return traj, canon


def test_canonical_flow_reproduces_direct_integration():
    traj, canon = direct_and_canonical(0.5)
    for name in ("q", "qd", "qdd"):
        assert np.max(np.abs(canon[name] - getattr(traj, name))) <= 1e-7


def test_unit_factor_breaks_equivalence():
    traj, canon = direct_and_canonical(1.0)
    assert np.max(np.abs(canon["qdd"] - traj.qdd)) > 1e-3


def test_non_third_order_rejected():
    with pytest.raises(ModelError, match="third-order"):
        legendre_W(scenarios.damped_oscillator().compile(), LegendreState(0, [0], [0], [0]))
    with pytest.raises(ModelError):
        canonical_rhs(scenarios.knife_edge().compile(), LegendreState(0, [0] * 3, [0] * 3, [0] * 3))


def test_singular_hessian_raises():
    P = ex.parse("qd0*qdd0 + qdd0^3", ex.ParseContext(1))
    cm = compile_power(P, 1)
    with pytest.raises(DegenerateDynamicsError):
        # the Hessian 6 qdd vanishes at the Newton starting point qdd = 0
        legendre_W(cm, LegendreState(0.0, [0.0], [0.0], [1.0]))


def test_state_validation():
    with pytest.raises(ValueError):
        LegendreState(0.0, [0.0, 1.0], [0.0], [0.0])


# spectrum


def test_spectrum_examples():
    sp = SpectrumParams(1.0, 1.0, 1.0, math.pi)
    assert sp.omega == 1.0
    assert spectrum_Wn(sp, 0) == 0.0
    assert abs(spectrum_Wn(sp, 1) - 1.5) <= 1e-12
    late = SpectrumParams(1.0, 1.0, 1.0, math.pi, t=math.log(2) / 4)
    assert abs(spectrum_Wn(late, 1) - 0.75) <= 1e-12
    other = SpectrumParams(0.3, 2.0, 0.7, -1.2, 0.5)
    assert spectrum_Wn(other, 2) / spectrum_Wn(other, 1) == 4.0


def test_spectrum_log_slope():
    for gamma, mu, hl in [(1.0, 1.0, 1.0), (0.3, 2.0, 0.7), (4.0, 0.5, 2.0)]:
        w = SpectrumParams(gamma, mu, hl, 1.0).omega
        for t in (0.5, 1.0, 3.0):
            h = 1e-3
            lo = spectrum_Wn(SpectrumParams(gamma, mu, hl, 1.0, t - h), 3)
            hi = spectrum_Wn(SpectrumParams(gamma, mu, hl, 1.0, t + h), 3)
            assert hi < lo
            slope = (math.log(hi) - math.log(lo)) / (2 * h)
            assert abs(slope + 4 * w) <= 1e-9 * 4 * w


@pytest.mark.parametrize("bad", [dict(gamma=0.0), dict(mu=-1.0), dict(hlambda=0.0),
                                 dict(p0=0.0), dict(t=-1.0)])
def test_spectrum_params_validated(bad):
    args = dict(gamma=1.0, mu=1.0, hlambda=1.0, p0=1.0, t=0.0) | bad
    with pytest.raises(ValueError):
        SpectrumParams(**args)


def test_spectrum_rejects_fractional_level():
    with pytest.raises(ValueError):
        spectrum_Wn(SpectrumParams(1.0, 1.0, 1.0, 1.0), 1.5)
