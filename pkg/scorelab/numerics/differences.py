"""
Central finite differences: gradient, Jacobian and Laplacian oracles.
"""

from typing import Callable, Union

import numpy as np

from scorelab.errors import DomainError, SpecificationError

_EPS = float(np.finfo(float).eps)

Step = Union[None, float, np.ndarray]


def default_step(x: np.ndarray) -> np.ndarray:
    """Cube root of machine epsilon, scaled by (1 + |x_i|)."""
    x = np.asarray(x, dtype=float)
    return _EPS ** (1.0 / 3.0) * (1.0 + np.abs(x))


def curvature_step(x: np.ndarray) -> np.ndarray:
    """Fourth root of machine epsilon, scaled by (1 + |x_i|); for second differences."""
    x = np.asarray(x, dtype=float)
    return _EPS ** 0.25 * (1.0 + np.abs(x))


def _steps(x: np.ndarray, h: Step, default=default_step) -> np.ndarray:
    if h is None:
        return default(x)
    steps = np.broadcast_to(np.asarray(h, dtype=float), x.shape).astype(float)
    if np.any(steps <= 0) or not np.all(np.isfinite(steps)):
        raise SpecificationError(f"Finite-difference step must be positive, got {h}")
    return steps


def _as_point(x) -> np.ndarray:
    return np.atleast_1d(np.asarray(x, dtype=float)).copy()


def _checked(value, where: np.ndarray) -> np.ndarray:
    value = np.asarray(value, dtype=float)
    if not np.all(np.isfinite(value)):
        raise DomainError(f"Non-finite function value on the finite-difference stencil at {where.tolist()}")
    return value


def finite_diff_gradient(f: Callable[[np.ndarray], float], x, h: Step = None) -> np.ndarray:
    x = _as_point(x)
    steps = _steps(x, h)
    grad = np.empty_like(x)
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = steps[i]
        up = _checked(f(x + e), x + e)
        down = _checked(f(x - e), x - e)
        grad[i] = (float(up) - float(down)) / (2.0 * steps[i])
    return grad


def finite_diff_jacobian(g: Callable[[np.ndarray], np.ndarray], x, h: Step = None) -> np.ndarray:
    """Jacobian of an array-valued g: result shape is g(x).shape + (len(x),)."""
    x = _as_point(x)
    steps = _steps(x, h)
    columns = []
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = steps[i]
        up = _checked(g(x + e), x + e)
        down = _checked(g(x - e), x - e)
        columns.append((up - down) / (2.0 * steps[i]))
    return np.stack(columns, axis=-1)


def finite_diff_laplacian(f: Callable[[np.ndarray], float], x, h: Step = None) -> float:
    x = _as_point(x)
    steps = _steps(x, h, default=curvature_step)
    center = float(_checked(f(x), x))
    total = 0.0
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = steps[i]
        up = float(_checked(f(x + e), x + e))
        down = float(_checked(f(x - e), x - e))
        total += (up - 2.0 * center + down) / (steps[i] * steps[i])
    return float(total)
