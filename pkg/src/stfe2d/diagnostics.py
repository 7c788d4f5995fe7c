"""Monitored functionals: energy parts, entropy, combined functional,
oscillation ratio, mass, dissipation bookkeeping."""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import fem, scheme
from .grid import Field, Grid
from .material import Material


class EnergyParts(NamedTuple):
    dirichlet: float
    potential: float
    curvature: float
    total: float


def energy_h(u: Field, mat: Material) -> EnergyParts:
    """Regularized discrete energy: gradient + potential + h^eps curvature."""
    grid = u.grid
    v = u.values
    e_dir = 0.5 * (fem.dirichlet_x(v, v, grid) + fem.dirichlet_y(v, v, grid))
    e_pot = fem.lumped_integral(mat.potential_F(v), grid)
    lap_u = fem.lap(v, grid)
    e_curv = 0.5 * scheme.mesh_weight(grid, mat.eps) * fem.inner_h(lap_u, lap_u, grid)
    return EnergyParts(e_dir, e_pot, e_curv, e_dir + e_pot + e_curv)


def entropy_h(u: Field, mat: Material) -> float:
    """Lumped integral of the entropy density G(u); nonnegative."""
    return fem.lumped_integral(mat.entropy_G(u.values), u.grid)


def r_functional(u: Field, mat: Material, alpha: float = 1.0, kappa: float = 1.0) -> float:
    if alpha <= 0 or kappa <= 0:
        raise ValueError("alpha and kappa must be positive")
    return alpha + energy_h(u, mat).total + kappa * entropy_h(u, mat)


def threshold_energy(grid: Grid, mat: Material, e_max_C: float) -> float:
    """Stopping threshold C * h^(-rho/(2+p))."""
    return e_max_C * grid.h ** (-mat.rho / (2.0 + mat.p))


def oscillation_ratio(u: Field) -> float:
    """Max of u(center)/u(neighbor) over all 3x3 periodic neighborhoods."""
    v = u.values
    if np.any(v <= 0.0):
        raise ValueError("oscillation ratio needs a strictly positive field")
    worst = 1.0
    for dj in (-1, 0, 1):
        for di in (-1, 0, 1):
            shifted = np.roll(np.roll(v, dj, axis=0), di, axis=1)
            worst = max(worst, float((v / shifted).max()))
    return worst


def mass(u: Field) -> float:
    return fem.lumped_integral(u.values, u.grid)


DIAG_COLUMNS = ("t", "mass", "u_min", "u_max", "E_dir", "E_pot", "E_curv",
                "E_total", "S", "R", "osc", "diss_x", "diss_y", "stopped")


@dataclass(frozen=True)
class DiagRecord:
    t: float
    mass: float
    u_min: float
    u_max: float
    E_dir: float
    E_pot: float
    E_curv: float
    E_total: float
    S: float
    R: float
    osc: float
    diss_x: float
    diss_y: float
    stopped: bool

    def row(self) -> tuple:
        return (self.t, self.mass, self.u_min, self.u_max, self.E_dir,
                self.E_pot, self.E_curv, self.E_total, self.S, self.R,
                self.osc, self.diss_x, self.diss_y, self.stopped)


def make_record(u: Field, mat: Material, t: float, stopped: bool,
                alpha: float = 1.0, kappa: float = 1.0) -> DiagRecord:
    parts = energy_h(u, mat)
    s = entropy_h(u, mat)
    dx, dy = scheme.dissipation(u, mat, stopped)
    return DiagRecord(
        t=t,
        mass=mass(u),
        u_min=u.min(),
        u_max=u.max(),
        E_dir=parts.dirichlet,
        E_pot=parts.potential,
        E_curv=parts.curvature,
        E_total=parts.total,
        S=s,
        R=alpha + parts.total + kappa * s,
        osc=oscillation_ratio(u),
        diss_x=dx,
        diss_y=dy,
        stopped=stopped,
    )
