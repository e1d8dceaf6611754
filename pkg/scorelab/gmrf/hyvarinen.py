"""
Estimation for the tridiagonal chain: Hyvarinen score (closed form and numeric), pseudo-likelihood
and exact likelihood.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np
from loguru import logger

from scorelab.errors import DegeneracyError, DomainError
from scorelab.estimation.families import ParametricFamily
from scorelab.estimation.gradients import register_closed_form
from scorelab.gmrf.model import (
    ChainData,
    TridiagonalModel,
    _check_length,
    chain_statistics,
    quadratic_form,
    simulate_chain,
    tridiag_logdet,
)
from scorelab.numerics.optimize import MinimizeResult, minimize
from scorelab.numerics.quadrature import Grid1D
from scorelab.numerics.rng import SeedSpec
from scorelab.scores.distributions import DensityModel, normal_density
from scorelab.scores.rules import RuleFamily

OMEGA_EPSILON = 1e-6


@dataclass(frozen=True)
class ChainEstimate:
    alpha_hat: float
    beta_hat: float
    lambda_hat: Optional[float]
    in_omega: bool
    degenerate: bool = False
    constrained: bool = False
    method: str = "hyvarinen"

    def model(self, N: int) -> TridiagonalModel:
        return TridiagonalModel(self.alpha_hat, self.beta_hat, N)

    def to_dict(self) -> dict:
        return {
            "method": self.method,
            "alpha_hat": self.alpha_hat,
            "beta_hat": self.beta_hat,
            "lambda_hat": self.lambda_hat,
            "in_omega": self.in_omega,
            "degenerate": self.degenerate,
            "constrained": self.constrained,
        }


def hyvarinen_objective(model: TridiagonalModel, data: ChainData) -> float:
    """-nu N alpha + 1/2 sum over vectors and sites of (alpha y_i + beta z_i)^2."""
    _check_length(model, data)
    r = model.alpha * data.y + model.beta * data.z
    return float(-data.nu * data.N * model.alpha + 0.5 * np.sum(r * r))


def _boundary_refit(data: ChainData, sign: float, epsilon: float) -> float:
    """alpha minimizing the objective on the ray beta = sign (alpha/2 - epsilon)."""
    y, z = data.y, data.z
    w = y + 0.5 * sign * z
    return float((data.nu * data.N + sign * epsilon * np.sum(z * w)) / np.sum(w * w))


def hyvarinen_closed_form(data: ChainData, constrain: bool = False, epsilon: float = OMEGA_EPSILON) -> ChainEstimate:
    """
    lambda = c_yz/c_zz, 1/alpha = c_yy.z/(nu N), beta = -alpha lambda.

    With `constrain`, an estimate outside Omega is replaced by the minimum on the boundary ray
    |beta| = alpha/2 - epsilon and flagged as constrained.
    """
    stats = chain_statistics(data)
    scale = max(stats.c_yy, np.finfo(float).tiny)
    if stats.c_yy_dot_z <= 1e-14 * scale:
        raise DegeneracyError(
            f"Degenerate chain statistics: c_yy.z={stats.c_yy_dot_z} (c_yy={stats.c_yy}, c_zz={stats.c_zz})"
        )
    count = data.nu * data.N
    if stats.degenerate:
        alpha = count / stats.c_yy
        logger.warning("c_zz = 0: lambda undefined, beta reported as 0")
        return ChainEstimate(alpha, 0.0, None, alpha > 0, degenerate=True)

    lam = stats.c_yz / stats.c_zz
    alpha = count / stats.c_yy_dot_z
    beta = -alpha * lam
    in_omega = alpha > 2.0 * abs(beta)
    if in_omega or not constrain:
        if not in_omega:
            logger.info("Hyvarinen estimate outside Omega (alpha={}, beta={})", alpha, beta)
        return ChainEstimate(alpha, beta, lam, in_omega)

    sign = 1.0 if beta > 0 else -1.0
    alpha_c = _boundary_refit(data, sign, epsilon)
    beta_c = sign * (0.5 * alpha_c - epsilon)
    logger.warning("Estimate refitted inside Omega: alpha {} -> {}, beta {} -> {}", alpha, alpha_c, beta, beta_c)
    return ChainEstimate(
        alpha_c,
        beta_c,
        -beta_c / alpha_c,
        alpha_c > 2.0 * abs(beta_c),
        constrained=True,
    )


def pseudo_loglik(model: TridiagonalModel, data: ChainData) -> float:
    """1/2 nu N ln alpha - 1/2 alpha sum (y_i - lambda z_i)^2, up to -1/2 nu N ln(2 pi)."""
    _check_length(model, data)
    if not model.alpha > 0:
        raise DomainError(f"Pseudo-likelihood needs alpha > 0, got {model.alpha}")
    resid = data.y - model.lam * data.z
    return float(0.5 * data.nu * data.N * np.log(model.alpha) - 0.5 * model.alpha * np.sum(resid * resid))


def exact_neg_loglik(model: TridiagonalModel, data: ChainData) -> float:
    """-nu/2 ln det(Phi) + 1/2 sum y' Phi y, normalizing constant dropped."""
    _check_length(model, data)
    model.require_omega()
    return float(-0.5 * data.nu * tridiag_logdet(model) + 0.5 * quadratic_form(model, data))


def _start(data: ChainData) -> np.ndarray:
    mean_sq = float(np.mean(data.y * data.y))
    return np.array([1.0 / mean_sq if mean_sq > 0 else 1.0, 0.0])


def _estimate(fit: MinimizeResult, method: str, alpha: float, beta: float) -> ChainEstimate:
    if not fit.converged:
        logger.warning("{} estimate did not converge: {}", method, fit.message)
    lam = -beta / alpha if alpha != 0 else None
    return ChainEstimate(alpha, beta, lam, alpha > 2.0 * abs(beta), method=method)


def hyvarinen_numeric_estimate(data: ChainData, start=None, tolerance: float = 1e-12) -> ChainEstimate:
    N = data.N
    fit = minimize(
        lambda t: hyvarinen_objective(TridiagonalModel(t[0], t[1], N), data),
        _start(data) if start is None else start,
        tolerance=tolerance,
    )
    return _estimate(fit, "hyvarinen-numeric", float(fit.argmin[0]), float(fit.argmin[1]))


def pseudo_likelihood_estimate(data: ChainData, start=None, tolerance: float = 1e-12) -> ChainEstimate:
    """Maximizes the pseudo-likelihood over (alpha, lambda) with alpha > 0."""
    N = data.N
    a0 = _start(data)[0]

    def objective(t: np.ndarray) -> float:
        if t[0] <= 0:
            return np.inf
        return -pseudo_loglik(TridiagonalModel(t[0], -t[0] * t[1], N), data)

    fit = minimize(objective, np.array([a0, 0.0]) if start is None else start, tolerance=tolerance)
    alpha, lam = float(fit.argmin[0]), float(fit.argmin[1])
    return _estimate(fit, "pseudo-likelihood", alpha, -alpha * lam)


def maximum_likelihood_estimate(data: ChainData, start=None, tolerance: float = 1e-12) -> ChainEstimate:
    N = data.N

    def objective(t: np.ndarray) -> float:
        model = TridiagonalModel(t[0], t[1], N)
        if not model.in_omega:
            return np.inf
        return exact_neg_loglik(model, data)

    if start is None:
        try:
            guess = hyvarinen_closed_form(data, constrain=True)
            start = np.array([guess.alpha_hat, guess.beta_hat])
        except DegeneracyError:
            start = _start(data)
    fit = minimize(objective, start, tolerance=tolerance)
    return _estimate(fit, "maximum-likelihood", float(fit.argmin[0]), float(fit.argmin[1]))


def _chain_log_density(alpha: float, beta: float, y: np.ndarray) -> np.ndarray:
    padded = np.pad(y, ((0, 0), (1, 1)))
    z = padded[:, :-2] + padded[:, 2:]
    return -0.5 * np.sum(y * (alpha * y + beta * z), axis=1)


def chain_density(model: TridiagonalModel) -> DensityModel:
    """Unnormalized -1/2 y' Phi y on R^N with gradient -Phi y and Laplacian -N alpha."""
    a, b, n = model.alpha, model.beta, model.N

    def gradient(y: np.ndarray) -> np.ndarray:
        padded = np.pad(y, ((0, 0), (1, 1)))
        return -(a * y + b * (padded[:, :-2] + padded[:, 2:]))

    return DensityModel(
        log_density=lambda y: _chain_log_density(a, b, y),
        dimension=n,
        gradient_log_density=gradient,
        laplacian_log_density=lambda y: np.full(y.shape[0], -n * a),
        normalized=False,
        label=f"chain({a}, {b}, N={n})",
    )


def _chain_hyvarinen_gradient(rule, family: ParametricFamily, xs, theta: np.ndarray) -> np.ndarray:
    y = np.asarray(xs, dtype=float).reshape(-1, family.dimension_of_data)
    padded = np.pad(y, ((0, 0), (1, 1)))
    z = padded[:, :-2] + padded[:, 2:]
    r = theta[0] * y + theta[1] * z
    n = y.shape[1]
    return np.stack([-n + np.sum(r * y, axis=1), np.sum(r * z, axis=1)], axis=1)


@dataclass(frozen=True)
class ChainFamily(ParametricFamily):
    dimension_of_data: int = 1


def chain_family(N: int) -> ChainFamily:
    """theta = (alpha, beta) over unnormalized chain densities; sampling requires theta in Omega."""

    def sampler(theta: np.ndarray, rng: np.random.Generator, size: int) -> np.ndarray:
        model = TridiagonalModel(theta[0], theta[1], N)
        model.require_omega()
        seed = SeedSpec(int(rng.integers(0, 2 ** 63)))
        return simulate_chain(model, size, seed).y

    return ChainFamily(
        name=f"gaussian-chain(N={N})",
        dimension=2,
        density_at=lambda theta: chain_density(TridiagonalModel(theta[0], theta[1], N)),
        bounds=((None, None), (None, None)),
        sampler=sampler,
        kind="gaussian-chain",
        dimension_of_data=int(N),
    )


register_closed_form(RuleFamily.HYVARINEN, "gaussian-chain", _chain_hyvarinen_gradient)


class ChainConditionals:
    """Full conditionals Y_i | rest ~ N(lambda z_i, 1/alpha) of a chain model."""

    def __init__(self, model: TridiagonalModel) -> None:
        if not model.alpha > 0:
            raise DomainError(f"Full conditionals need alpha > 0, got {model.alpha}")
        self.model = model

    def _vector(self, x) -> np.ndarray:
        y = np.asarray(x, dtype=float).reshape(-1)
        if y.size != self.model.N:
            raise DomainError(f"Configuration has {y.size} sites, model has {self.model.N}")
        return y

    def sites(self, x):
        self._vector(x)
        return range(self.model.N)

    def value(self, x, site: int) -> float:
        return float(self._vector(x)[site])

    def conditional(self, x, site: int) -> DensityModel:
        y = self._vector(x)
        left = y[site - 1] if site > 0 else 0.0
        right = y[site + 1] if site + 1 < y.size else 0.0
        var = 1.0 / self.model.alpha
        mean = self.model.lam * (left + right)
        return normal_density(mean, var, domain=Grid1D.around(mean, np.sqrt(var)))
