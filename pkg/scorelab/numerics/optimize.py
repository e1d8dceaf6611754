"""
Unconstrained (optionally box-projected) minimization for low-dimensional objectives.

Nelder-Mead simplex descent, then rounds of quasi-Newton polish on finite-difference gradients
until the objective stops decreasing.
"""

from dataclasses import dataclass
from typing import Callable, Optional, Sequence, Tuple

import numpy as np
from loguru import logger
from scipy import optimize as sp_optimize

from scorelab.errors import DomainError
from scorelab.numerics.differences import finite_diff_gradient

Bounds = Optional[Sequence[Tuple[Optional[float], Optional[float]]]]

MAX_POLISH_ROUNDS = 8


@dataclass(frozen=True)
class MinimizeResult:
    argmin: np.ndarray
    value: float
    converged: bool
    iterations: int
    message: str = ""


def _safe(objective: Callable[[np.ndarray], float]) -> Callable[[np.ndarray], float]:
    def wrapped(x: np.ndarray) -> float:
        v = float(objective(np.asarray(x, dtype=float)))
        return v if np.isfinite(v) else np.inf
    return wrapped


def _project(x: np.ndarray, bounds: Bounds) -> np.ndarray:
    if not bounds:
        return x
    lo = np.array([-np.inf if b[0] is None else b[0] for b in bounds], dtype=float)
    hi = np.array([np.inf if b[1] is None else b[1] for b in bounds], dtype=float)
    return np.clip(x, lo, hi)


def _gradient_norm(fun: Callable[[np.ndarray], float], x: np.ndarray) -> float:
    try:
        return float(np.linalg.norm(finite_diff_gradient(fun, x)))
    except DomainError:
        return np.inf


def minimize(
    objective: Callable[[np.ndarray], float],
    start,
    tolerance: float = 1e-10,
    bounds: Bounds = None,
    max_iterations: int = 10000,
) -> MinimizeResult:
    x0 = _project(np.atleast_1d(np.asarray(start, dtype=float)).copy(), bounds)
    f0 = float(objective(x0))
    if not np.isfinite(f0):
        raise DomainError(f"Objective is not finite at the start point {x0.tolist()}")

    fun = _safe(objective)
    scale = lambda v: max(1.0, abs(v))

    simplex = sp_optimize.minimize(
        fun,
        x0,
        method="Nelder-Mead",
        bounds=bounds,
        options={
            "xatol": tolerance,
            "fatol": tolerance,
            "maxiter": int(max_iterations),
            "maxfev": 4 * int(max_iterations),
            "adaptive": x0.size > 2,
        },
    )
    iterations = int(simplex.nit)
    capped = (not simplex.success) and iterations >= int(max_iterations)

    best_x, best_v = x0, f0
    if float(simplex.fun) < best_v:
        best_x, best_v = np.asarray(simplex.x, dtype=float), float(simplex.fun)

    decrease = np.inf
    method = "L-BFGS-B" if bounds else "BFGS"
    for round_no in range(MAX_POLISH_ROUNDS):
        if iterations >= int(max_iterations):
            capped = True
            break
        try:
            polish = sp_optimize.minimize(
                fun,
                best_x,
                method=method,
                jac=lambda x: finite_diff_gradient(fun, x),
                bounds=bounds,
                options={"maxiter": int(max_iterations) - iterations, "gtol": 1e-12},
            )
        except DomainError as e:
            logger.debug("Gradient polish stopped at round {}: {}", round_no, e)
            decrease = 0.0
            break
        iterations += int(polish.nit)
        candidate = float(polish.fun)
        decrease = best_v - candidate if candidate < best_v else 0.0
        if candidate < best_v:
            best_x, best_v = _project(np.asarray(polish.x, dtype=float), bounds), candidate
        if decrease < tolerance * scale(best_v):
            break

    grad_norm = _gradient_norm(fun, best_x)
    converged = (
        not capped
        and decrease < tolerance * scale(best_v)
        and grad_norm < np.sqrt(tolerance) * scale(best_v)
    )

    if bounds and not converged and not capped:
        # A box-projected minimum sits on a face with non-zero gradient.
        converged = decrease < tolerance * scale(best_v)

    message = "converged" if converged else (
        "iteration cap reached" if capped else f"gradient norm {grad_norm:.3g} above threshold"
    )
    if not converged:
        logger.debug("Minimize did not converge: {} (value={}, x={})", message, best_v, best_x.tolist())

    return MinimizeResult(
        argmin=best_x,
        value=best_v,
        converged=bool(converged),
        iterations=iterations,
        message=message,
    )
