"""Exact arithmetic: Gaussian rationals, polynomials, rational functions, linear algebra."""

from .scalar import I, ONE, ZERO, Scalar, as_scalar
from .poly import MAX_DEGREE, RatFunc, SpacePoly, monomials_upto
from .linalg import (LambdaMatrix, RowReducer, ScalarMatrix, UniPoly, determinant,
                     nullspace, rank, rank_at, solve_combination)
from .syntax import (format_expression, format_poly, format_ratfunc, format_scalar,
                     parse_expression, parse_poly, parse_ratfunc, parse_scalar)


def poly_diff(p: SpacePoly, var: int) -> SpacePoly:
    """Exact partial derivative of ``p`` with respect to coordinate ``var``."""
    return p.diff(var)


__all__ = [
    "Scalar", "as_scalar", "ZERO", "ONE", "I",
    "SpacePoly", "RatFunc", "MAX_DEGREE", "monomials_upto", "poly_diff",
    "ScalarMatrix", "RowReducer", "nullspace", "rank", "rank_at", "solve_combination",
    "LambdaMatrix", "UniPoly", "determinant",
    "parse_expression", "parse_poly", "parse_ratfunc", "parse_scalar",
    "format_scalar", "format_poly", "format_ratfunc", "format_expression",
]
