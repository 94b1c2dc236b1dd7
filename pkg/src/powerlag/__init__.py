"""Power-Lagrangian dynamics: compile P(t, q, qd, qdd) into the covariant
equation of motion dP/dqd - 2 d/dt dP/dqdd = 0, integrate it, and certify its
structural properties numerically."""

__version__ = "0.1.0"
