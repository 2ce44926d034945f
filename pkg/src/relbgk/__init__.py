"""Deterministic solver and verification suite for the relativistic
BGK-Marle kinetic equation with a truncated approximating collision family.
"""

from . import diagnostics, moments, phase_space, relaxation, solver, specfun
from .moments import MatterMoments, ThermoFields, fields_of, matter_moments
from .phase_space import (Distribution, MomentumGrid, SpatialGrid, build_grid,
                          read_snapshot, write_snapshot)
from .relaxation import (JuttnerParams, TruncationParams, juttner_eval,
                         project_equilibrium, truncated_relax)
from .solver import SolverConfig, run

__version__ = "1.0.0"

__all__ = [
    "Distribution", "JuttnerParams", "MatterMoments", "MomentumGrid",
    "SolverConfig", "SpatialGrid", "ThermoFields", "TruncationParams",
    "build_grid", "diagnostics", "fields_of", "juttner_eval",
    "matter_moments", "moments", "phase_space", "project_equilibrium",
    "read_snapshot", "relaxation", "run", "solver", "specfun",
    "truncated_relax", "write_snapshot",
]
