"""Exact series, rigorous brackets and a shooting oracle for the connection
constant a* = y'(0) of y'' - y' + y = y^3, y(0) = 0, y(inf) = 1."""

from .exact import BigRational, CoeffTable, compute_coeffs, series_ode_residual_coeffs, verify_recursion
from .series import (
    AStarBracket,
    SeriesEval,
    astar_bounds,
    astar_series,
    astar_sqrt,
    eval_P,
    first_order_rhs,
    integral_residual,
    radius_estimate,
)

__version__ = "0.1.0"

__all__ = [
    "AStarBracket",
    "BigRational",
    "CoeffTable",
    "SeriesEval",
    "astar_bounds",
    "astar_series",
    "astar_sqrt",
    "compute_coeffs",
    "eval_P",
    "first_order_rhs",
    "integral_residual",
    "radius_estimate",
    "series_ode_residual_coeffs",
    "verify_recursion",
]
