"""Optimal portfolio liquidation under multivariate transient price impact.

Matrix-valued decay kernels describe how trading one asset moves the prices
of all assets and how that impact fades; this package evaluates and
transforms such kernels, decides whether they admit profitable round trips
(positive definiteness of the cost form), computes optimal liquidation
strategies by several cross-checking routes, and verifies expected costs by
Monte Carlo simulation.
"""

from .grids import TimeGrid, equidistant_grid, geometric_grid
from .kernels import (
    ClampedExpKernel,
    analytic_shape_flags,
    CongruenceKernel,
    Constant,
    CrossExpKernel,
    DecayKernel,
    DiagCongruenceKernel,
    Exp2x2Kernel,
    ExpDecay,
    GaussianSquared,
    JordanExpKernel,
    LeftMultiplyKernel,
    Linear2x2Kernel,
    LinearPolya,
    MatrixExpKernel,
    MatrixFunctionKernel,
    PermanentKernel,
    PlusTemporaryKernel,
    PowerCapped,
    PropertyReport,
    ScalarFunction,
    ScalarTimesMatrixKernel,
    ShapeWitness,
    Verdict,
    check_shape_properties,
    check_structure,
    kernel_from_dict,
    make_matrix_function_kernel,
    scalar_function_from_dict,
    transform_kernel,
)
from .posdef import (
    GramMatrix,
    GramWitness,
    GridPDResult,
    PosDefReport,
    assemble_gram,
    check_grid_pd,
    classify_positive_definite,
    search_violation,
)
from .simulate import (
    MartingaleModel,
    SimulationReport,
    estimate_expected_cost,
    impacted_price,
    revenues,
    sample_paths,
)
from .solver import (
    BasisDecomposition,
    RefineResult,
    SolveResult,
    Strategy,
    UnboundedCostError,
    basis_strategies,
    cost,
    lagrange_residual,
    refine,
    simultaneous_diagonalize,
    solve_1d_exp,
    solve_best,
    solve_commuting,
    solve_exp_closed_form,
    solve_kkt,
)

__version__ = "0.1.0"

__all__ = [
    "TimeGrid",
    "equidistant_grid",
    "geometric_grid",
    "DecayKernel",
    "ScalarFunction",
    "ExpDecay",
    "GaussianSquared",
    "LinearPolya",
    "Constant",
    "PowerCapped",
    "PermanentKernel",
    "MatrixExpKernel",
    "MatrixFunctionKernel",
    "DiagCongruenceKernel",
    "Exp2x2Kernel",
    "CrossExpKernel",
    "Linear2x2Kernel",
    "ClampedExpKernel",
    "JordanExpKernel",
    "ScalarTimesMatrixKernel",
    "LeftMultiplyKernel",
    "CongruenceKernel",
    "PlusTemporaryKernel",
    "make_matrix_function_kernel",
    "transform_kernel",
    "kernel_from_dict",
    "scalar_function_from_dict",
    "check_structure",
    "check_shape_properties",
    "analytic_shape_flags",
    "PropertyReport",
    "Verdict",
    "ShapeWitness",
    "GramMatrix",
    "GridPDResult",
    "GramWitness",
    "PosDefReport",
    "assemble_gram",
    "check_grid_pd",
    "classify_positive_definite",
    "search_violation",
    "Strategy",
    "SolveResult",
    "BasisDecomposition",
    "RefineResult",
    "UnboundedCostError",
    "cost",
    "solve_kkt",
    "lagrange_residual",
    "solve_exp_closed_form",
    "solve_1d_exp",
    "simultaneous_diagonalize",
    "solve_commuting",
    "basis_strategies",
    "refine",
    "solve_best",
    "MartingaleModel",
    "SimulationReport",
    "sample_paths",
    "impacted_price",
    "revenues",
    "estimate_expected_cost",
]
