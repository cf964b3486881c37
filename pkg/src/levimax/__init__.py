"""Levi forms, regularized maxima and J-holomorphic discs on a chart of C^n.

Coordinates: ``z_j = x_{2j-1} + i x_{2j}``; points are real arrays of shape
``(..., 2n)`` with batch axes leading.
"""

__version__ = "0.1.0"

from .adapted import adapted_chart, linear_normalize, quadratic_normalize, verify_adapted
from .almost_complex import (
    AlmostComplexStructure,
    ExpressionMatrixField,
    complex_matrix,
    decompose_linear,
    pushforward,
    scale_structure,
    structure_from_complex_matrix,
    transform_complex_matrix,
    validate_structure,
)
from .charts import ExpressionChange, QuadraticChange
from .disc import cauchy_green, hessian_via_disc, solve_disc
from .expr import parse_expression
from .fields import ExpressionField, HermitianMetric, derivative, hermitian_hessian_jst
from .levi import LEVI_FACTOR, hessian_invariance_check, is_strictly_psh, levi_matrix, levi_value, min_levi_eigen
from .regmax import ThetaVector, mollifier_constant, regmax_eval, regmax_field, regmax_grad
from .scenarios import load_scenario
from .smoothing import smooth_max, verify_estimate, verify_hessian_bound
