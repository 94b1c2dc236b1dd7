import json
import math

import numpy as np
import pytest

from powerlag import scenarios
from powerlag.integrate import (COMPLETED, MAX_STEPS, SINGULAR_DYNAMICS, STEP_FAILURE,
                                InitialConditionError, IntegratorConfig, balance_residuals,
                                monitor_balance, simulate)
from powerlag.jets import JetState
from powerlag.model import ModelSpec, compile_model


def free_particle():
    return compile_model(ModelSpec(n=1, L="0.5*qd0^2"))


@pytest.mark.parametrize("method", ["rk4", "rk45"])
def test_free_particle_reaches_one(method):
    traj = simulate(free_particle(), JetState(t=0.0, q=[0.0], qd=[1.0]),
                    IntegratorConfig(method=method, t1=1.0, dt=0.1))
    assert traj.status == COMPLETED
    assert traj.t[-1] == pytest.approx(1.0, abs=1e-15)
    assert abs(traj.q[-1, 0] - 1.0) <= 1e-12
    assert np.all(np.diff(traj.t) > 0)


def test_damped_oscillator_closed_form():
    sc = scenarios.damped_oscillator()
    traj = simulate(sc.compile(), sc.initial, IntegratorConfig(t1=10.0))
    exact = sc.expected["closed_form"](traj.t)
    assert np.max(np.abs(traj.q[:, 0] - exact)) <= 1e-6


def test_closed_form_oracle_is_itself_a_solution():
    # the frozen oracle is independent of the integrator: check it against
    # the ODE by finite differences
    for gamma in (0.1, 2.0, 3.0):
        sc = scenarios.damped_oscillator(gamma=gamma, v0=0.4)
        x = sc.expected["closed_form"]
        t, h = np.linspace(0.1, 5, 30), 1e-4
        xdd = (x(t + h) - 2 * x(t) + x(t - h)) / h ** 2
        xd = (x(t + h) - x(t - h)) / (2 * h)
        np.testing.assert_allclose(xdd + gamma * xd + x(t), 0, atol=1e-5)
        assert x(0.0) == pytest.approx(1.0)


def rk4_error(dt):
    sc = scenarios.damped_oscillator()
    traj = simulate(sc.compile(), sc.initial, IntegratorConfig(method="rk4", t1=10.0, dt=dt))
    return np.max(np.abs(traj.q[:, 0] - sc.expected["closed_form"](traj.t)))


def test_rk4_fourth_order():
    factor = rk4_error(0.1) / rk4_error(0.05)
    assert 12 <= factor <= 20


def test_rk4_last_step_lands_on_t1():
    traj = simulate(free_particle(), JetState(t=0.0, q=[0.0], qd=[1.0]),
                    IntegratorConfig(method="rk4", t1=1.0, dt=0.3))
    assert traj.t[-1] == 1.0 and len(traj) == 5


def test_adaptive_step_bounds():
    sc = scenarios.damped_oscillator()
    traj = simulate(sc.compile(), sc.initial, IntegratorConfig(t1=10.0, rel_tol=1e-3, abs_tol=1e-3))
    assert np.max(np.diff(traj.t)) <= 5.0 + 1e-12
    traj = simulate(sc.compile(), sc.initial, IntegratorConfig(t1=10.0, dt_max=0.05))
    assert np.max(np.diff(traj.t)) <= 0.05 + 1e-12


def test_runaway_rate():
    sc = scenarios.lad_nonrelativistic()
    traj = simulate(sc.compile(), sc.initial, sc.config)
    assert traj.status == COMPLETED
    slope = np.polyfit(traj.t, np.log(np.abs(traj.qdd[:, 0])), 1)[0]
    assert slope == pytest.approx(sc.expected["runaway_rate"], rel=0.01)
    assert sc.expected["runaway_rate"] == pytest.approx(1.5)


def test_acceleration_ceiling_stops_runaway():
    sc = scenarios.lad_nonrelativistic()
    cfg = sc.config.with_overrides(t1=100.0, accel_ceiling=1e3)
    traj = simulate(sc.compile(), sc.initial, cfg)
    assert traj.status == STEP_FAILURE
    assert traj.t[-1] < 100.0
    assert np.all(np.abs(traj.qdd) <= 1e3)
    assert np.all(np.isfinite(traj.q))


def test_max_steps_status():
    traj = simulate(free_particle(), JetState(t=0.0, q=[0.0], qd=[1.0]),
                    IntegratorConfig(method="rk4", t1=1.0, dt=0.01, max_steps=10))
    assert traj.status == MAX_STEPS and len(traj) == 11


def test_singular_dynamics_mid_run():
    # the mass of q1 vanishes at t = 0.5, which is a grid point of the run
    cm = compile_model(ModelSpec(n=2, L="0.5*qd0^2 + 0.5*(0.5 - t)*qd1^2"))
    traj = simulate(cm, JetState(t=0.0, q=[0.0, 0.0], qd=[1.0, 1.0]),
                    IntegratorConfig(method="rk4", t1=1.0, dt=0.25))
    assert traj.status == SINGULAR_DYNAMICS
    assert traj.t.tolist() == [0.0, 0.25]


def test_initial_condition_errors():
    cm = compile_model(ModelSpec(n=2, L="0.5*(qd0^2 + qd1^2)", constraints=["qd1"]))
    with pytest.raises(InitialConditionError, match="constraints"):
        simulate(cm, JetState(t=0.0, q=[0, 0], qd=[1.0, 1e-6]), IntegratorConfig())
    sc = scenarios.bremsstrahlung_1d()
    with pytest.raises(InitialConditionError, match="acceleration"):
        simulate(sc.compile(), JetState(t=0.0, q=[0.0], qd=[1.0]), IntegratorConfig())
    with pytest.raises(InitialConditionError, match="coordinates"):
        simulate(free_particle(), JetState(t=0.0, q=[0, 0], qd=[0, 0]), IntegratorConfig())
    with pytest.raises(InitialConditionError, match="singular"):
        cm = compile_model(ModelSpec(n=1, L="0.5*q0*qd0^2"))
        simulate(cm, JetState(t=0.0, q=[0.0], qd=[1.0]), IntegratorConfig())


@pytest.mark.parametrize("bad", [dict(method="euler"), dict(t1=0.0), dict(dt=0.0),
                                 dict(rel_tol=0.0), dict(max_steps=0)])
def test_config_validation(bad):
    with pytest.raises(ValueError):
        IntegratorConfig(**bad)


def test_csv_columns():
    sc = scenarios.pendulum()
    traj = simulate(sc.compile(), sc.initial, sc.config.with_overrides(t1=0.1))
    lines = traj.to_csv().splitlines()
    assert lines[0] == "t,q0,q1,qd0,qd1,mu0,U,balance_residual,f0"
    assert len(lines) == len(traj) + 1
    first = lines[1].split(",")
    assert float(first[1]) == sc.initial.q[0]
    assert repr(float(first[1])) == repr(float(sc.initial.q[0]))

    sc = scenarios.bremsstrahlung_1d()
    traj = simulate(sc.compile(), sc.initial, sc.config.with_overrides(t1=0.1))
    assert traj.to_csv().splitlines()[0] == "t,q0,qd0,qdd0,U,balance_residual"


def test_jsonl_matches_csv():
    sc = scenarios.damped_oscillator()
    traj = simulate(sc.compile(), sc.initial, sc.config.with_overrides(t1=0.5))
    rows = [json.loads(line) for line in traj.to_jsonl().splitlines()]
    header = traj.to_csv().splitlines()[0].split(",")
    assert all(list(r) == header for r in rows)
    np.testing.assert_array_equal([r["q0"] for r in rows], traj.q[:, 0])


@pytest.mark.parametrize("name", ["damped_oscillator", "knife_edge", "bremsstrahlung_1d"])
def test_bit_identical_reruns(name):
    sc = scenarios.get(name)
    a = simulate(sc.compile(), sc.initial, sc.config.with_overrides(t1=1.0))
    b = simulate(sc.compile(), sc.initial, sc.config.with_overrides(t1=1.0))
    assert a.to_csv() == b.to_csv()


def test_balance_monitor_conservative():
    sc = scenarios.damped_oscillator(gamma=0.0)
    traj = simulate(sc.compile(), sc.initial, sc.config.with_overrides(dt_max=1e-2))
    assert monitor_balance(sc.compile(), traj) <= 1e-6
    assert np.ptp(traj.U) <= 1e-7


def test_balance_monitor_viscous_and_monotone():
    # the three-point monitor errs by about h^2 U'''/6, hence the finer grid
    sc = scenarios.damped_oscillator(gamma=0.5)
    cm = sc.compile()
    traj = simulate(cm, sc.initial, sc.config.with_overrides(dt_max=2e-3))
    assert monitor_balance(cm, traj) <= 1e-6
    assert np.all(np.diff(traj.U) <= 1e-9)
    assert traj.U[-1] < 0.2 * traj.U[0]


def test_balance_monitor_proper_time_lad():
    sc = scenarios.lad_relativistic_proper()
    cm = sc.compile()
    traj = simulate(cm, sc.initial, sc.config.with_overrides(dt_max=1e-2))
    assert monitor_balance(cm, traj) <= 1e-6


def test_balance_residuals_need_three_records():
    traj = simulate(free_particle(), JetState(t=0.0, q=[0.0], qd=[1.0]),
                    IntegratorConfig(method="rk4", t1=1.0, dt=1.0))
    with pytest.raises(ValueError):
        balance_residuals(traj)


def test_knife_edge_drift_and_radius():
    sc = scenarios.knife_edge()
    cm = sc.compile()
    traj = simulate(cm, sc.initial, sc.config.with_overrides(t1=100.0))
    assert traj.status == COMPLETED
    assert np.max(np.abs(traj.constraint)) <= 1e-8
    cx, cy = sc.expected["center"]
    r = np.hypot(traj.q[:, 0] - cx, traj.q[:, 1] - cy)
    assert np.max(np.abs(r - sc.expected["radius"])) <= 1e-6


def test_pendulum_keeps_rod_length():
    sc = scenarios.pendulum()
    traj = simulate(sc.compile(), sc.initial, sc.config)
    np.testing.assert_allclose(np.hypot(traj.q[:, 0], traj.q[:, 1]), 1.0, atol=1e-6)
    # energy is conserved up to the integrator error
    assert np.ptp(traj.U) <= 1e-6 * max(1.0, abs(traj.U[0]))


def test_proper_time_normalization():
    sc = scenarios.lad_relativistic_proper()
    traj = simulate(sc.compile(), sc.initial, sc.config)
    eta = np.array(scenarios.ETA)
    uu = (traj.qd ** 2) @ eta
    au = (traj.qd * traj.qdd) @ eta
    assert traj.status == COMPLETED
    assert np.max(np.abs(uu + 1)) <= 1e-6 and np.max(np.abs(au)) <= 1e-6
    assert traj.t[-1] == pytest.approx(10.0)


def test_initial_time_comes_from_config():
    traj = simulate(free_particle(), JetState(t=5.0, q=[0.0], qd=[1.0]),
                    IntegratorConfig(t0=2.0, t1=3.0))
    assert traj.t[0] == 2.0 and math.isclose(traj.q[-1, 0], 1.0, abs_tol=1e-12)
