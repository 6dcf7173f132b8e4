"""Invariant-domain-preserving solver for compressible viscous flow.

Continuous P1 finite elements with graph-viscosity stabilization, convex
limiting, and a Strang-split implicit treatment of the viscous terms.
"""

from .state import (
    AdmissibilityError,
    GasModel,
    SolutionField,
    assemble_state,
    check_admissible,
    is_admissible,
    thermodynamics,
)
from .mesh import MeshTopology, generate_structured_tri_2d, generate_uniform_1d, import_mesh
from .assembly import DiscreteOperators, assemble_operators
from .boundary import BoundaryCondition
from .hyperbolic import CFLError, HyperbolicConfig, ssprk2_hyperbolic
from .parabolic import ParabolicConfig, parabolic_step
from .driver import StepReport, TimeControls, run_simulation, strang_step
from .becker import BeckerParams, becker_profile, becker_state, shock_params
from .errors import compute_delta_q
from .config import RunConfig, build_problem, load_config

__version__ = "0.1.0"

__all__ = [
    "AdmissibilityError",
    "BeckerParams",
    "BoundaryCondition",
    "CFLError",
    "DiscreteOperators",
    "GasModel",
    "HyperbolicConfig",
    "MeshTopology",
    "ParabolicConfig",
    "RunConfig",
    "SolutionField",
    "StepReport",
    "TimeControls",
    "assemble_operators",
    "assemble_state",
    "becker_profile",
    "becker_state",
    "build_problem",
    "check_admissible",
    "compute_delta_q",
    "generate_structured_tri_2d",
    "generate_uniform_1d",
    "import_mesh",
    "is_admissible",
    "load_config",
    "parabolic_step",
    "run_simulation",
    "shock_params",
    "ssprk2_hyperbolic",
    "strang_step",
    "thermodynamics",
]
