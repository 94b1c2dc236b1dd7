"""Legendre transform in the accelerations for the bremsstrahlung model.

P = m a v - gamma v^2/2 - mu a^2/2 is quadratic in a, so p = dP/da is
invertible and W(t, x, v, p) = p a - P is well defined.
"""
import math

import numpy as np

from powerlag import scenarios
from powerlag.integrate import simulate
from powerlag.jets import JetState
from powerlag.quantize import (LegendreState, SpectrumParams, canonical_trajectory, legendre_W,
                               momenta, spectrum_Wn)

sc = scenarios.bremsstrahlung_1d(m=1.0, gamma=1.0, mu=1.0)
cm = sc.compile()

s = JetState(t=0.0, q=[0.0], qd=[2.0], qdd=[0.25])
p = momenta(cm, s)
W, a = legendre_W(cm, LegendreState(s.t, s.q, s.qd, p))
print(f"p = {p[0]:g}, recovered a = {a[0]:g}, W = {W:g}")

# The canonical flow reproduces direct integration only with the factor 1/2
traj = simulate(cm, sc.initial, sc.config.with_overrides(rel_tol=1e-12, abs_tol=1e-13))
for factor in (0.5, 1.0):
    canon = canonical_trajectory(cm, sc.initial, traj.t, factor=factor)
    gap = np.max(np.abs(canon["qdd"] - traj.qdd))
    print(f"factor {factor}: max |a_canonical - a_direct| = {gap:.2e}")

# Quantized levels: growing like n^2, decaying in t at rate 4 omega
sp = SpectrumParams(gamma=1.0, mu=1.0, hlambda=1.0, p0=math.pi)
print("\n n   W_n")
for n in range(6):
    print(f"{n:2d}  {spectrum_Wn(sp, n):8.4f}")
late = SpectrumParams(gamma=1.0, mu=1.0, hlambda=1.0, p0=math.pi, t=1.0)
print(f"W_3(t=1) / W_3(0) = {spectrum_Wn(late, 3) / spectrum_Wn(sp, 3):.6f}"
      f" vs exp(-4 omega) = {math.exp(-4 * sp.omega):.6f}")
