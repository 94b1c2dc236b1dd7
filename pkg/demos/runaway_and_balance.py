"""Radiation reaction in one line of PE, and what it does to a trajectory.

Run with ``python3 demos/runaway_and_balance.py``.
"""
import numpy as np

from powerlag import scenarios
from powerlag.cli import derive_text
from powerlag.integrate import monitor_balance, simulate

# A free charge with the Abraham-Lorentz term. Any nonzero initial
# acceleration grows like exp(t / tau0), tau0 = 2 q^2 / (3 m).
sc = scenarios.lad_nonrelativistic(m=1.0, charge=1.0)
print("X for the free charge:")
print(derive_text(sc.spec))

traj = simulate(sc.compile(), sc.initial, sc.config)
rate = np.polyfit(traj.t, np.log(np.abs(traj.qdd[:, 0])), 1)[0]
print(f"status {traj.status}, {len(traj)} rows up to t = {traj.t[-1]:.3f}")
print(f"fitted growth rate {rate:.5f}, 1/tau0 = {sc.expected['runaway_rate']:.5f}")

# Starting with a = 0 picks the physical, non-runaway branch
quiet = sc.initial.replace(qdd=np.zeros(3))
print("with a(0) = 0 the acceleration stays at",
      np.max(np.abs(simulate(sc.compile(), quiet, sc.config).qdd)))

# Energy balance: dU/dt + power lost must vanish along the solution.
# The monitor differentiates U numerically, so it is only as good as the
# output spacing.
osc = scenarios.damped_oscillator(gamma=0.3)
for dt_max in (2e-2, 1e-2, 5e-3):
    tr = simulate(osc.compile(), osc.initial, osc.config.with_overrides(dt_max=dt_max))
    print(f"damped oscillator, dt_max {dt_max:g}: balance residual {monitor_balance(osc.compile(), tr):.2e}")

U = tr.U
print("U decreases monotonically:", bool(np.all(np.diff(U) <= 1e-12)))
