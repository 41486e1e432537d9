"""deltanls: ground states and action minimizers of the 2D nonlinear
Schroedinger equation with an attractive point defect, plus the
verification battery that checks every computed state against the
closed-form structure of the problem."""

__version__ = "0.1.0"

from .errors import ConfigError, ContractError, DomainError
from .special import (
    EULER_GAMMA,
    PhysicalParams,
    bessel_k0,
    green_diff_grad_l2_sq,
    green_diff_l2_sq,
    green_l2_sq,
    green_lp_p,
    green_value,
    omega_threshold,
    theta,
)
from .grid import RadialField, RadialGrid, build_grid, grad_sq, integrate, radial_laplacian
from .functionals import (
    DecomposedState,
    FunctionalReport,
    action,
    energy,
    evaluate,
    lagrange_frequency,
    mass,
    nehari,
    origin_value,
    quadratic_form,
    rebase,
    s_tilde,
    state_lp_p,
)
from .branch import NehariBranchPoint, branch_point, branch_roots, branch_scan, g_function
from .rearrange import (
    POLYA_SZEGO_SLACK,
    CellGrid,
    hardy_littlewood_check,
    polya_szego_check,
    rearrange,
    sum_rearrangement_check,
)
from .solvers import SolveResult, SolverConfig, energy_gradient, solve_action, solve_ground_state, solve_soliton
from .verify import (
    VerificationReport,
    boundary_condition_residual,
    comparison_suite,
    el_residual,
    log_slope,
    positivity_and_monotonicity,
    verify_state,
)
