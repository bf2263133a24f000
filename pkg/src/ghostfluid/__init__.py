"""Second-order ghost-point solver for 1D elliptic interface problems.

Solves ``-(gamma u')' = f`` on [0, 1] with a coefficient that may jump at an
interface ``alpha``, where ``[u] = gD`` and ``[gamma u'] = gN``.  Interface
conditions are relaxed together with the interior equations, and the
relaxation drives a geometric multigrid solver.
"""

from .ddm import ddm_iterate
from .discretization import (
    assemble_system,
    build_interface_stencil,
    compute_defect,
    direct_solve,
)
from .expr import ExpressionError, eval_jet, evaluate, parse_expression
from .grid import (
    GridError,
    GridSpec,
    InteriorField,
    ProblemData,
    TwoSidedField,
    build_grid,
    mirror_problem,
)
from .manufactured import (
    ExampleSpec,
    convergence_orders,
    error_norms,
    example_from_strings,
    jump_study,
    preset,
    problem_for,
    synthesize_problem,
)
from .multigrid import (
    ConvergenceFailure,
    MgParams,
    estimate_convergence_factor,
    solve_multigrid,
)
from .relaxation import gauss_seidel_sweep, iterate_to_tolerance, jacobi_sweep

__all__ = [
    "ConvergenceFailure",
    "ExampleSpec",
    "ExpressionError",
    "GridError",
    "GridSpec",
    "InteriorField",
    "MgParams",
    "ProblemData",
    "TwoSidedField",
    "assemble_system",
    "build_grid",
    "build_interface_stencil",
    "compute_defect",
    "convergence_orders",
    "ddm_iterate",
    "direct_solve",
    "error_norms",
    "estimate_convergence_factor",
    "eval_jet",
    "evaluate",
    "example_from_strings",
    "gauss_seidel_sweep",
    "iterate_to_tolerance",
    "jacobi_sweep",
    "jump_study",
    "mirror_problem",
    "parse_expression",
    "preset",
    "problem_for",
    "solve_multigrid",
    "synthesize_problem",
]
