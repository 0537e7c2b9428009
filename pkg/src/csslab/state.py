"""The evolving unknown: an m-equivariant radial profile on a grid."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass

import numpy as np

from .errors import GridMismatch, InvalidArgument


@dataclass(frozen=True, eq=False)
class EquivariantState:
    """Radial profile u(r) with phi = exp(i m theta) u(r).

    Attributes
    ----------
    m : int
        Equivariance index.
    g : float
        Coupling constant of the quartic term.
    grid : RadialGrid
    u : ndarray of complex
        Nodal values of the profile.
    t : float
        Time stamp.
    """

    m: int
    g: float
    grid: object
    u: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        u = np.asarray(self.u, dtype=complex)
        if u.shape != (self.grid.n,):
            raise GridMismatch(f"profile has shape {u.shape}, grid has {self.grid.n} nodes")
        if int(self.m) != self.m:
            raise InvalidArgument("m must be an integer")
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "m", int(self.m))
        object.__setattr__(self, "g", float(self.g))
        object.__setattr__(self, "t", float(self.t))

    def replace(self, **changes):
        return dataclasses.replace(self, **changes)

    @property
    def density(self):
        return np.abs(self.u) ** 2

    @property
    def parity(self):
        # u behaves like r^|m| near the origin
        return -1 if self.m % 2 else 1


def zero_state(grid, m=0, g=1.0):
    return EquivariantState(m=m, g=g, grid=grid, u=np.zeros(grid.n, dtype=complex))
