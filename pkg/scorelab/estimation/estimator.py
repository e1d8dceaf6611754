"""
Minimum-score estimation with sandwich (Godambe) asymptotics.
"""

from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
from loguru import logger
from scorelab.errors import CapabilityError, DomainError, SingularMatrixError, SpecificationError
from scorelab.estimation.families import ParametricFamily
from scorelab.estimation.gradients import as_observations, score_gradients
from scorelab.numerics.differences import finite_diff_jacobian
from scorelab.numerics.linalg import spd_inverse
from scorelab.numerics.quadrature import simpson_weights
from scorelab.numerics.optimize import minimize
from scorelab.scores.distributions import DensityModel
from scorelab.scores.evaluate import score_vector
from scorelab.scores.rules import RuleSpec

SYMMETRY_TOL = 1e-8


@dataclass(frozen=True)
class EstimationResult:
    theta_hat: np.ndarray
    value: float
    converged: bool
    n: int
    J: Optional[np.ndarray] = None
    K: Optional[np.ndarray] = None
    godambe: Optional[np.ndarray] = None
    sandwich_cov: Optional[np.ndarray] = None
    iterations: int = 0
    message: str = ""

    @property
    def has_asymptotics(self) -> bool:
        return self.sandwich_cov is not None

    def standard_errors(self) -> Optional[np.ndarray]:
        if self.sandwich_cov is None:
            return None
        return np.sqrt(np.clip(np.diag(self.sandwich_cov), 0.0, None))

    def to_dict(self) -> dict:
        def listed(a):
            return None if a is None else np.asarray(a).tolist()

        return {
            "theta_hat": listed(self.theta_hat),
            "value": self.value,
            "converged": self.converged,
            "n": self.n,
            "J": listed(self.J),
            "K": listed(self.K),
            "godambe": listed(self.godambe),
            "sandwich_cov": listed(self.sandwich_cov),
            "standard_errors": listed(self.standard_errors()),
            "iterations": self.iterations,
            "message": self.message,
        }


def _symmetrize(A: np.ndarray) -> np.ndarray:
    A = np.atleast_2d(np.asarray(A, dtype=float))
    return 0.5 * (A + A.T)


def godambe_parts(J: np.ndarray, K: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """G = K J^-1 K and G^-1; raises SingularMatrixError when J or K is singular."""
    J, K = _symmetrize(J), _symmetrize(K)
    J_inv = spd_inverse(J)
    G = _symmetrize(K @ J_inv @ K)
    K_inv = np.linalg.inv(K) if np.linalg.cond(K) < 1e12 else None
    if K_inv is None:
        raise SingularMatrixError("K is singular")
    return G, _symmetrize(K_inv @ J @ K_inv)


def empirical_information(rule: RuleSpec, family: ParametricFamily, data, theta) -> Tuple[np.ndarray, np.ndarray]:
    """
    Plug-in J = mean s s' and K = mean grad_theta s over the data.
    """
    theta = family.check_domain(theta)
    s = score_gradients(rule, family, data, theta)
    if not np.all(np.isfinite(s)):
        raise DomainError("Score gradient is infinite for some observation at the estimate")
    J = _symmetrize(s.T @ s / s.shape[0])
    K = finite_diff_jacobian(lambda t: score_gradients(rule, family, data, t).mean(axis=0), theta)
    return J, _symmetrize(K)


def _model_nodes(family: ParametricFamily, theta: np.ndarray):
    dist = family.distribution(theta)
    if family.discrete:
        return list(dist.support), np.asarray(dist.probs, dtype=float)
    if not isinstance(dist, DensityModel) or dist.dimension != 1 or dist.domain is None:
        raise CapabilityError(f"Model-based information needs a one-dimensional density with a domain ({family.name})")
    nodes = dist.domain.nodes()
    weights = simpson_weights(dist.domain) * dist.q(nodes)
    return nodes, weights


def model_information(rule: RuleSpec, family: ParametricFamily, theta) -> Tuple[np.ndarray, np.ndarray]:
    """J(theta) = E_theta s s' and K(theta) = E_theta grad s by exact sums or quadrature."""
    theta = family.check_domain(theta)
    xs, w = _model_nodes(family, theta)
    live = np.flatnonzero(w != 0)
    xs = [xs[i] for i in live] if family.discrete else xs[live]
    w = w[live]
    s = score_gradients(rule, family, xs, theta)
    if not np.all(np.isfinite(s)):
        raise DomainError("Score gradient is infinite where the model has mass")
    J = _symmetrize((s * w[:, None]).T @ s)
    K = finite_diff_jacobian(lambda t: w @ score_gradients(rule, family, xs, t), theta)
    return J, _symmetrize(K)


def data_start(family: ParametricFamily, data) -> np.ndarray:
    """A starting point computed from the sample: median, moments or clipped frequency."""
    xs = np.asarray(data, dtype=float)
    if family.kind == "location":
        return np.array([float(np.median(xs))])
    if family.kind == "normal":
        return np.array([float(np.mean(xs)), max(float(np.var(xs)), 1e-8)])
    if family.kind == "bernoulli":
        return np.array([float(np.clip(np.mean(xs), 0.01, 0.99))])
    return np.zeros(family.dimension)


def minimum_score_estimate(
    rule: RuleSpec,
    family: ParametricFamily,
    data,
    start,
    tolerance: float = 1e-10,
    max_iterations: int = 10000,
) -> EstimationResult:
    """Minimize sum_i S(x_i, theta); fill J, K, G and the sandwich covariance at the estimate."""
    data = as_observations(family, data)
    n = len(data)
    if n == 0:
        raise SpecificationError("Estimation needs at least one observation")
    start = family.check_domain(start)

    def objective(theta: np.ndarray) -> float:
        try:
            dist = family.distribution(theta)
        except DomainError:
            return np.inf
        return float(np.sum(score_vector(rule, data, dist)))

    fit = minimize(objective, start, tolerance=tolerance, bounds=family.scipy_bounds, max_iterations=max_iterations)
    theta_hat = fit.argmin
    if not fit.converged:
        logger.warning("Estimation for {} did not converge: {}", family.name, fit.message)

    J = K = G = cov = None
    try:
        J, K = empirical_information(rule, family, data, theta_hat)
        G, G_inv = godambe_parts(J, K)
        cov = G_inv / n
    except (SingularMatrixError, DomainError) as e:
        logger.warning("Asymptotics unavailable at theta={}: {}", theta_hat.tolist(), e)
        G = cov = None

    logger.info("Estimate {} (n={}, value={}, converged={})", theta_hat.tolist(), n, fit.value, fit.converged)
    return EstimationResult(
        theta_hat=theta_hat,
        value=float(fit.value),
        converged=bool(fit.converged),
        n=n,
        J=J,
        K=K,
        godambe=G,
        sandwich_cov=cov,
        iterations=fit.iterations,
        message=fit.message,
    )
