"""Stochastic thin-film equation with quadratic mobility on a periodic
rectangle: tensor-product linear finite elements with mass lumping,
entropy-consistent mobility averaging, spectral conservative noise, and an
Euler-Maruyama integrator with positivity guard and energy-threshold stop.
"""

from .diagnostics import DiagRecord, energy_h, entropy_h, oscillation_ratio, r_functional
from .grid import Field, Grid
from .integrator import RunConfig, SimState, run, step_em
from .material import Material, PowerPairPotential
from .noise import NoiseModel, PowerLawSchedule, TableSchedule, strat_constant

__all__ = [
    "DiagRecord", "Field", "Grid", "Material", "NoiseModel", "PowerLawSchedule",
    "PowerPairPotential", "RunConfig", "SimState", "TableSchedule", "energy_h",
    "entropy_h", "oscillation_ratio", "r_functional", "run", "step_em",
    "strat_constant",
]
