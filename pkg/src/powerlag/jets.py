"""Jet states: time plus per-coordinate derivative values."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["JetState", "MissingJetError", "JET_FIELDS"]

JET_FIELDS = ("q", "qd", "qdd", "qddd", "qdddd")


class MissingJetError(ValueError):
    pass


def _vec(x):
    if x is None:
        return None
    return np.atleast_1d(np.asarray(x, dtype=float)).copy()


@dataclass
class JetState:
    """State at one instant. Higher jets are optional; ``mu`` holds the
    multiplier rates (values substituted for ``lamd``)."""

    t: float
    q: np.ndarray
    qd: np.ndarray | None = None
    qdd: np.ndarray | None = None
    qddd: np.ndarray | None = None
    qdddd: np.ndarray | None = None
    mu: np.ndarray | None = None

    def __post_init__(self):
        self.t = float(self.t)
        for name in JET_FIELDS + ("mu",):
            setattr(self, name, _vec(getattr(self, name)))

    @property
    def n(self) -> int:
        return len(self.q)

    @property
    def order(self) -> int:
        """Highest consecutive derivative order present."""
        order = -1
        for name in JET_FIELDS:
            if getattr(self, name) is None:
                break
            order += 1
        return order

    def jet(self, order: int) -> np.ndarray:
        value = getattr(self, JET_FIELDS[order])
        if value is None:
            raise MissingJetError(f"jet order {order} ({JET_FIELDS[order]}) is missing")
        return value

    def replace(self, **changes) -> "JetState":
        fields = {name: getattr(self, name) for name in ("t",) + JET_FIELDS + ("mu",)}
        fields.update(changes)
        return JetState(**fields)
