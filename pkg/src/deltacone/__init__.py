"""
delta-cone

Numerical Birman-Schwinger analysis of attractive delta-interactions supported
on conical surfaces: critical couplings, ground-state energies and the
comparison of circular and non-circular cones.
"""

__version__ = "0.1.0"

from .bs_operator import BsAssembler, BsMatrix, Grid, assemble_full, assemble_radial, build_grid
from .exceptions import DeltaConeError
from .geometry import Cone, Loop, make_circle, make_perturbed_loop
from .knot_energy import FParams, phi_f, phi_gap
from .solver import (
    ProblemSpec,
    bound_state_exists,
    critical_alpha,
    ground_state_energy,
    isoperimetric_compare,
    limit_study,
)
from .spectral import largest_eigenpair

__all__ = [
    "BsAssembler",
    "BsMatrix",
    "Cone",
    "DeltaConeError",
    "FParams",
    "Grid",
    "Loop",
    "ProblemSpec",
    "assemble_full",
    "assemble_radial",
    "bound_state_exists",
    "build_grid",
    "critical_alpha",
    "ground_state_energy",
    "isoperimetric_compare",
    "largest_eigenpair",
    "limit_study",
    "make_circle",
    "make_perturbed_loop",
    "phi_f",
    "phi_gap",
]
