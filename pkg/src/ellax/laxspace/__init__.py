"""Tyurin-data constrained spaces of L- and M-operators."""

from .algebra import AlgebraKind
from .constraints import (ConstraintReport, check_l_constraints, check_m_constraints,
                          commutator_closure, commutator_field, point_equations)
from .polebasis import PoleFunction, build_pole_basis
from .spaces import (Ansatz, AnsatzGroup, FunctionSpaceBasis, LinearSystem, almost_graded_residual,
                     graded_subspace, leading_coefficients, local_element, nullspace,
                     so_variant_space, solve_constrained_space)
from .tyurin import Divisor, TyurinData, random_alpha, random_points, random_tyurin, tyurin_count

__all__ = [
    "AlgebraKind", "Ansatz", "AnsatzGroup", "ConstraintReport", "Divisor", "FunctionSpaceBasis",
    "LinearSystem", "PoleFunction", "TyurinData", "almost_graded_residual", "build_pole_basis",
    "check_l_constraints", "check_m_constraints", "commutator_closure", "commutator_field",
    "graded_subspace", "leading_coefficients", "local_element", "nullspace", "point_equations",
    "random_alpha", "random_points", "random_tyurin", "so_variant_space",
    "solve_constrained_space", "tyurin_count",
]
