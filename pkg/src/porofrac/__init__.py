"""Desk-scale 2D simulator for flow and deformation in a fractured poroelastic medium.

A rectangular poroelastic matrix carries dynamic Biot equations; an embedded
1D fracture carries a compressible Darcy flow with width-cubed permeability.
The fracture faces exchange traction with the fluid and, optionally, resist
interpenetration and sliding through a normal-compliance contact law with a
regularized stick-slip friction model.
"""

from .geometry import (
    Point2,
    Mesh2D,
    FractureMesh,
    DofMap,
    build_rect_mesh_with_fracture,
    uniform_refine,
    tip_distance,
)
from .materials import (
    MaterialParams,
    WidthProfile,
    SourceData,
    effective_stress,
    poroelastic_stress,
    darcy_flux,
    fracture_flux,
    width_from_jump,
    coulomb_equivalent,
    penetration_depth,
)
from .assembly import SystemMatrices, assemble_system, assemble_loads, apply_dirichlet
from .contact import psi_eps, psi_eps_grad, FractureQuadrature
from .solver import State, StepConfig, DaeSystem, Problem, check_pencil, solve_initial_state
from .diagnostics import EnergyReport, ConvergenceTable

__version__ = "0.1.0"
