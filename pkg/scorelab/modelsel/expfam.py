"""
Hyvarinen predictive score for exponential families p(x|eta) ∝ exp{a(x) + eta' t(x)}, from the
posterior mean and dispersion of the natural parameter.
"""

from dataclasses import dataclass
from typing import Callable

import numpy as np

from scorelab.errors import SpecificationError

ArrayFn = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class ExponentialFamily:
    """
    Evaluators at a single point x in R^d with k natural statistics: `grad_a` (d,),
    `laplacian_a` scalar, `jacobian_t` (d, k) with entries dt_j/dx_i, `laplacian_t` (k,).
    """

    grad_a: ArrayFn
    laplacian_a: Callable[[np.ndarray], float]
    jacobian_t: ArrayFn
    laplacian_t: ArrayFn
    label: str = ""


def expfam_hyvarinen_score(family: ExponentialFamily, mu, Sigma, x0) -> float:
    """Delta a + bd' mu + 1/2 |grad a + J mu|^2 + tr(J Sigma J') at x0."""
    x = np.atleast_1d(np.asarray(x0, dtype=float))
    mu = np.atleast_1d(np.asarray(mu, dtype=float))
    Sigma = np.atleast_2d(np.asarray(Sigma, dtype=float))
    grad_a = np.atleast_1d(np.asarray(family.grad_a(x), dtype=float))
    J = np.atleast_2d(np.asarray(family.jacobian_t(x), dtype=float))
    bd = np.atleast_1d(np.asarray(family.laplacian_t(x), dtype=float))
    d, k = J.shape
    if grad_a.shape != (d,):
        raise SpecificationError(f"grad a has shape {grad_a.shape}, expected ({d},)")
    if bd.shape != (k,) or mu.shape != (k,):
        raise SpecificationError(f"Natural statistic has {k} components; got bd {bd.shape}, mu {mu.shape}")
    if Sigma.shape != (k, k):
        raise SpecificationError(f"Posterior dispersion has shape {Sigma.shape}, expected ({k}, {k})")
    g = grad_a + J @ mu
    return float(family.laplacian_a(x) + bd @ mu + 0.5 * g @ g + np.trace(J @ Sigma @ J.T))


def normal_mean_expfam(sigma2: float) -> ExponentialFamily:
    """N(theta, sigma2) in natural form: a(x) = -x^2/(2 sigma2), t(x) = x, eta = theta/sigma2."""
    s2 = float(sigma2)
    if not s2 > 0:
        raise SpecificationError(f"Variance must be positive, got {sigma2}")
    return ExponentialFamily(
        grad_a=lambda x: -x / s2,
        laplacian_a=lambda x: -float(x.size) / s2,
        jacobian_t=lambda x: np.eye(x.size),
        laplacian_t=lambda x: np.zeros(x.size),
        label=f"normal-mean(sigma2={s2})",
    )
