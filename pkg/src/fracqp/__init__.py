"""Exact Newton-Dinkelbach solvers for binary quadratic fractional programs
with low-rank numerator and denominator."""
from .analysis import annotate_divergence, bregman, check_lemmas, iteration_scaling
from .dinkelbach import (
    ParametricPoint,
    SolveResult,
    SolveTrace,
    eval_parametric,
    initial_point,
    newton_step,
    solve,
    solve_classical,
    solve_lookahead,
)
from .engines import (
    EngineError,
    NoExactEngineError,
    QPSolution,
    enumerate_sign_cells,
    solve_qp,
    solve_qp_brute,
    solve_qp_fix_enum,
    solve_qp_rank1,
    solve_qp_zonotope,
)
from .estimator import DinkelbachSolver
from .generator import FamilySpec, generate
from .model import (
    EigenForm,
    GramForm,
    HomogenizedForms,
    InstanceError,
    ProblemInstance,
    diagonal,
    ensure_nonnegative_root,
    homogenize,
    merge_parametric,
    validate_instance,
)

__version__ = "0.1.0"
