"""Discretely divergence-free velocity from the stream function."""

from dataclasses import dataclass

import numpy as np

from .compact import DX, W1, apply_along, solve_along
from .grid import DimensionError, Field2D


@dataclass(frozen=True)
class VelocityPair:
    u: Field2D
    v: Field2D

    def __post_init__(self):
        if self.u.grid != self.v.grid:
            raise DimensionError("u and v live on different grids")

    @property
    def grid(self):
        return self.u.grid

    def max_speed(self) -> float:
        return max(float(np.max(np.abs(self.u.values))), float(np.max(np.abs(self.v.values))))


def reconstruct_velocity(psi: Field2D) -> VelocityPair:
    """Solve ``W1y u = -Dy psi / dy`` and ``W1x v = Dx psi / dx``.

    With these compact derivatives ``Dx W1y u / dx + Dy W1x v / dy`` vanishes
    identically, because ``Dx`` and ``Dy`` commute.
    """
    g = psi.grid
    if not g.periodic:
        raise ValueError("velocity reconstruction needs a periodic grid")
    p = psi.values
    u = -solve_along(W1, apply_along(DX, p, 1), 1) / g.dy
    v = solve_along(W1, apply_along(DX, p, 0), 0) / g.dx
    return VelocityPair(psi.like(u), psi.like(v))


def divergence_residual(vel: VelocityPair) -> Field2D:
    """Pointwise ``Dx W1y u / dx + Dy W1x v / dy``."""
    g = vel.grid
    if not g.periodic:
        raise ValueError("divergence residual needs a periodic grid")
    du = apply_along(DX, apply_along(W1, vel.u.values, 1), 0) / g.dx
    dv = apply_along(DX, apply_along(W1, vel.v.values, 0), 1) / g.dy
    return vel.u.like(du + dv)
