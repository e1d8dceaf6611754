"""
Shared numerical kernel: quadrature, finite differences, minimization, dense SPD algebra, seeded streams.
"""

from scorelab.numerics.differences import (
    default_step,
    finite_diff_gradient,
    finite_diff_jacobian,
    finite_diff_laplacian,
)
from scorelab.numerics.linalg import as_matrix, cholesky_upper, require_symmetric, solve_spd, spd_inverse
from scorelab.numerics.optimize import MinimizeResult, minimize
from scorelab.numerics.quadrature import Grid1D, integrate, simpson_weights, tensor_nodes
from scorelab.numerics.rng import SeedSpec

__all__ = [
    "Grid1D",
    "MinimizeResult",
    "SeedSpec",
    "as_matrix",
    "cholesky_upper",
    "default_step",
    "finite_diff_gradient",
    "finite_diff_jacobian",
    "finite_diff_laplacian",
    "integrate",
    "minimize",
    "require_symmetric",
    "simpson_weights",
    "solve_spd",
    "spd_inverse",
    "tensor_nodes",
]
