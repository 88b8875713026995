"""Shape-constrained B-spline regression with certified uniform Lipschitz bounds."""

from .errors import ConditioningError, CyclingError, DomainError, InconsistencyError, MeshError, ShapeSplineError
from .estimator import FitResult, HolderSpec, fit, project_noise_free, sup_error
from .qp import LinearPiece, QpSolution, brute_force_qp, linear_piece, lipschitz_constant, solve_qp
from .shapeops import (
    ActiveSet,
    DifferenceOperator,
    GramianReport,
    build_F,
    build_X,
    build_Z_H,
    delta_matrix,
    derivative_coeffs,
    first_difference,
    gramian,
    is_shape_feasible,
    limit_gramians,
    property_h_sequence,
    tau_knots,
    v_alpha_knots,
    weighted_difference,
)
from .splines import (
    DesignPoints,
    DesignSystem,
    KnotSequence,
    basis_matrix,
    build_design_system,
    eval_basis,
    eval_basis_derivative,
    l1_norm,
)

__version__ = "0.1.0"

__all__ = [
    "ActiveSet",
    "ConditioningError",
    "CyclingError",
    "DesignPoints",
    "DesignSystem",
    "DifferenceOperator",
    "DomainError",
    "FitResult",
    "GramianReport",
    "HolderSpec",
    "InconsistencyError",
    "KnotSequence",
    "LinearPiece",
    "MeshError",
    "QpSolution",
    "ShapeSplineError",
    "basis_matrix",
    "brute_force_qp",
    "build_F",
    "build_X",
    "build_Z_H",
    "build_design_system",
    "delta_matrix",
    "derivative_coeffs",
    "eval_basis",
    "eval_basis_derivative",
    "first_difference",
    "fit",
    "gramian",
    "is_shape_feasible",
    "l1_norm",
    "limit_gramians",
    "linear_piece",
    "lipschitz_constant",
    "project_noise_free",
    "property_h_sequence",
    "solve_qp",
    "sup_error",
    "tau_knots",
    "v_alpha_knots",
    "weighted_difference",
]
