"""Mimetic difference operators: discrete product and chain rules, averaging
operators and entropy dissipation of second derivatives."""

from mimetic_ops.bv import (
    PointMassMeasure,
    StepFunction,
    averaged_composition,
    derivative_measure,
    volpert_chain_residual,
    volpert_product_residual,
)
from mimetic_ops.checks import (
    ConvergenceTable,
    FeasibilityReport,
    chain_rule_residual,
    convergence_study,
    counterexample_hinge_entropy,
    counterexample_lobatto,
    counterexample_nonmimetic_d2,
    entropy_production,
    entropy_production_telescoped,
    product_rule_feasibility,
    product_rule_residual,
    residual_convergence,
)
from mimetic_ops.entropy import Entropy, hinge, linear, parse_entropy, smooth_hinge, square
from mimetic_ops.errors import (
    InvalidArgumentError,
    MimeticError,
    UnsupportedClosureError,
    UnsupportedError,
)
from mimetic_ops.grid import Grid, GridFunction, Topology, refine, sample, uniform_grid
from mimetic_ops.operators import (
    DiffOp,
    OpKind,
    apply,
    averaged_gradient_Afp,
    averaging_A,
    central_periodic,
    collocation_lobatto,
    exactness_orders,
    leading_error_coefficient,
    polynomial_exactness_order,
    sbp_first_order2,
)
from mimetic_ops.quadrature import QuadratureSpec, default_quadrature, gauss_legendre
from mimetic_ops.second_derivative import (
    CoefficientField,
    MassMatrix,
    Stencil,
    d2_periodic_order2,
    d2_periodic_order4,
    d2_stencil,
    d2_varcoef_nonmimetic,
    d2_varcoef_sbp,
    find_negative_offcenter,
    mass_matrix,
    moment_conditions,
)

__version__ = "0.1.0"

__all__ = [
    "CoefficientField", "ConvergenceTable", "DiffOp", "Entropy", "FeasibilityReport",
    "Grid", "GridFunction", "InvalidArgumentError", "MassMatrix", "MimeticError",
    "OpKind", "PointMassMeasure", "QuadratureSpec", "Stencil", "StepFunction",
    "Topology", "UnsupportedClosureError", "UnsupportedError",
    "apply", "averaged_composition", "averaged_gradient_Afp", "averaging_A",
    "central_periodic", "chain_rule_residual", "collocation_lobatto",
    "convergence_study", "counterexample_hinge_entropy", "counterexample_lobatto",
    "counterexample_nonmimetic_d2", "d2_periodic_order2", "d2_periodic_order4",
    "d2_stencil", "d2_varcoef_nonmimetic", "d2_varcoef_sbp", "default_quadrature",
    "derivative_measure", "entropy_production", "entropy_production_telescoped",
    "exactness_orders", "find_negative_offcenter", "gauss_legendre", "hinge",
    "leading_error_coefficient", "linear", "mass_matrix", "moment_conditions",
    "parse_entropy", "polynomial_exactness_order", "product_rule_feasibility",
    "product_rule_residual", "refine", "residual_convergence", "sample",
    "sbp_first_order2", "smooth_hinge", "square", "uniform_grid",
    "volpert_chain_residual", "volpert_product_residual",
]
