"""Boundary-data reconstruction for the 2D (modified) Helmholtz Cauchy problem.

P1 finite elements on tagged triangulations, Tikhonov-regularized misfit
functionals, and a particle swarm optimizer, with an exact quadratic oracle
for checking the swarm.
"""

from ._kernels import backend
from .cases import CASES, add_noise, make_case, synthesize_data
from .errors import (
    ConfigError,
    EigenvalueProximityError,
    HelmPsoError,
    IllConditionedBasis,
    InvalidArgument,
    NotFound,
    OracleUnavailable,
)
from .fem import (
    BoundaryField,
    FactorizedOperator,
    assemble_and_factorize,
    boundary_h1_seminorm,
    boundary_l2_norm,
    recover_flux,
    solve,
    trace,
)
from .mesh import (
    Mesh,
    Tag,
    boundary_segment,
    build_unit_disc_mesh,
    build_unit_square_mesh,
    read_mesh,
    validate,
    write_mesh,
)
from .objective import (
    FastObjective,
    Formulation,
    InverseProblem,
    NaiveObjective,
    ObjectiveConfig,
    Regularizer,
    build_response_basis,
    eval_fast,
    eval_naive,
)
from .oracle import extract_quadratic, solve_normal_equations
from .param import coeffs_to_field, make_basis, project
from .pso import PsoConfig, PsoResult, PsoTrace, run

__version__ = "0.1.0"
