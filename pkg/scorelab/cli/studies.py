"""
Seeded simulation studies behind `simulate --study ...`.

Replicate i draws from SeedSpec(seed).stream(i) (or the chain stream i), so results are the same
whatever the pool width or the order in which replicates finish. Failed replicates are listed in
the diagnostics and left out of the aggregates.
"""

from typing import Any, Callable, Dict, List, Tuple

import numpy as np
from loguru import logger

from scorelab.errors import DivergenceError, SpecificationError
from scorelab.estimation.estimator import data_start, godambe_parts, minimum_score_estimate, model_information
from scorelab.estimation.families import ParametricFamily
from scorelab.estimation.robustness import check_unbiased_estimating_equation
from scorelab.gmrf.hyvarinen import hyvarinen_closed_form, hyvarinen_numeric_estimate, pseudo_likelihood_estimate
from scorelab.gmrf.model import TridiagonalModel, simulate_chain
from scorelab.modelsel.linear import NormalLinearModel, nlm_improper_hyvarinen, prequential_hyvarinen
from scorelab.numerics.rng import SeedSpec
from scorelab.scores.rules import RuleSpec
from scorelab.workers.replicate_worker import Outcome, ReplicatePool

SANDWICH_RTOL = 0.15
UNBIASED_SE_LIMIT = 4.0
EQUIVALENCE_TOL = 1e-6

StudyResult = Tuple[Dict[str, Any], Dict[str, Any]]


def _run(pool: ReplicatePool, fn: Callable[[int], Any], replicates: int) -> Tuple[List[Outcome], Dict[str, Any]]:
    outcomes = pool.map(fn, replicates)
    failed = [{"index": o.index, "error": o.error} for o in outcomes if not o.ok]
    diagnostics = {"replicates": int(replicates), "failed": len(failed), "failed_replicates": failed}
    return [o for o in outcomes if o.ok], diagnostics


def sandwich_study(
    rule: RuleSpec,
    family: ParametricFamily,
    theta,
    size: int,
    replicates: int,
    seed: SeedSpec,
    pool: ReplicatePool,
) -> StudyResult:
    """
    Empirical covariance of sqrt(n)(theta_hat - theta) against the asymptotic G^-1.
    Each replicate starts the optimizer from its own sample, not from the true theta.
    """
    theta = family.check_domain(theta)
    if replicates < 2:
        raise SpecificationError("The sandwich study needs at least 2 replicates")

    def one(i: int) -> np.ndarray:
        x = family.sample(theta, seed.stream(i).generator(), size)
        fit = minimum_score_estimate(rule, family, x, start=data_start(family, x))
        if not fit.converged:
            raise DivergenceError(f"estimate did not converge: {fit.message}")
        return fit.theta_hat

    ok, diagnostics = _run(pool, one, replicates)
    if len(ok) < 2:
        raise DivergenceError(f"Only {len(ok)} of {replicates} replicates produced an estimate")
    estimates = np.array([o.value for o in ok])
    scaled = np.sqrt(size) * (estimates - theta[None, :])
    empirical = np.atleast_2d(np.cov(scaled, rowvar=False, ddof=1))

    J, K = model_information(rule, family, theta)
    G, asymptotic = godambe_parts(J, K)
    diag_a, diag_e = np.diag(asymptotic), np.diag(empirical)
    relative = np.abs(diag_e - diag_a) / np.abs(diag_a)
    worst = float(np.max(relative))
    logger.info("Sandwich study: worst relative variance error {} over {} replicates", worst, len(ok))

    results = {
        "theta": theta,
        "sample_size": int(size),
        "estimates": estimates,
        "mean_estimate": estimates.mean(axis=0),
        "empirical_cov": empirical,
        "asymptotic_cov": asymptotic,
        "J": J,
        "K": K,
        "godambe": G,
        "relative_error": relative,
        "max_relative_error": worst,
        "within_tolerance": worst <= SANDWICH_RTOL,
    }
    return results, diagnostics


def unbiased_study(
    rule: RuleSpec,
    family: ParametricFamily,
    theta,
    size: int,
    replicates: int,
    seed: SeedSpec,
    pool: ReplicatePool,
) -> StudyResult:
    """Monte Carlo mean of s(X, theta) per replicate, in standard errors."""
    theta = family.check_domain(theta)

    def one(i: int) -> Tuple[np.ndarray, np.ndarray]:
        return check_unbiased_estimating_equation(rule, family, theta, size, seed.stream(i))

    ok, diagnostics = _run(pool, one, replicates)
    means = np.array([o.value[0] for o in ok])
    ses = np.array([o.value[1] for o in ok])
    with np.errstate(divide="ignore", invalid="ignore"):
        z = np.where(ses > 0, np.abs(means) / ses, np.where(means == 0, 0.0, np.inf))
    worst = float(np.max(z)) if z.size else float("nan")
    results = {
        "theta": theta,
        "draws": int(size),
        "means": means,
        "standard_errors": ses,
        "max_abs_z": worst,
        "within_tolerance": bool(z.size) and worst <= UNBIASED_SE_LIMIT,
    }
    return results, diagnostics


def gmrf_equivalence_study(
    alpha: float,
    beta: float,
    N: int,
    nu: int,
    replicates: int,
    seed: SeedSpec,
    pool: ReplicatePool,
) -> StudyResult:
    """Closed-form Hyvarinen, numeric Hyvarinen and pseudo-likelihood estimates on simulated chains."""
    model = TridiagonalModel(alpha, beta, N)
    model.require_omega()

    def one(i: int) -> Dict[str, Any]:
        data = simulate_chain(model, nu, seed, stream=i)
        fits = [hyvarinen_closed_form(data), hyvarinen_numeric_estimate(data), pseudo_likelihood_estimate(data)]
        pairs = []
        for a in range(len(fits)):
            for b in range(a + 1, len(fits)):
                pairs.append(abs(fits[a].lambda_hat - fits[b].lambda_hat))
                pairs.append(abs(fits[a].alpha_hat - fits[b].alpha_hat))
        return {"estimates": [f.to_dict() for f in fits], "max_difference": max(pairs)}

    ok, diagnostics = _run(pool, one, replicates)
    differences = np.array([o.value["max_difference"] for o in ok])
    agree = int(np.count_nonzero(differences <= EQUIVALENCE_TOL))
    logger.info("GMRF equivalence: {} of {} replicates agree within {}", agree, len(ok), EQUIVALENCE_TOL)
    results = {
        "alpha": float(alpha),
        "beta": float(beta),
        "N": int(N),
        "nu": int(nu),
        "replicate_results": [o.value for o in ok],
        "max_difference": float(differences.max()) if differences.size else None,
        "agreeing": agree,
        "all_agree": bool(differences.size) and agree == differences.size,
    }
    return results, diagnostics


def prequential_study(
    intercept: float,
    sigma2: float,
    N: int,
    replicates: int,
    seed: SeedSpec,
    pool: ReplicatePool,
) -> StudyResult:
    """
    Truth: y = intercept + noise (p = 1). Rival: intercept plus a standard-normal covariate (p = 2).
    A replicate selects the model with the lower prequential Hyvarinen score.
    """
    if N < 4:
        raise SpecificationError(f"The prequential study needs N >= 4, got {N}")

    def one(i: int) -> Dict[str, Any]:
        rng = seed.stream(i).generator()
        covariate = rng.standard_normal(N)
        y = intercept + np.sqrt(sigma2) * rng.standard_normal(N)
        small = NormalLinearModel(np.ones((N, 1)), sigma2, label="p1")
        large = NormalLinearModel(np.column_stack([np.ones(N), covariate]), sigma2, label="p2")
        preq = (prequential_hyvarinen(small, y), prequential_hyvarinen(large, y))
        batch = (nlm_improper_hyvarinen(small, y), nlm_improper_hyvarinen(large, y))
        return {
            "prequential": list(preq),
            "batch": list(batch),
            "prequential_picks_true": preq[0] < preq[1],
            "batch_picks_true": batch[0] < batch[1],
        }

    ok, diagnostics = _run(pool, one, replicates)
    count = len(ok)
    preq_hits = sum(1 for o in ok if o.value["prequential_picks_true"])
    batch_hits = sum(1 for o in ok if o.value["batch_picks_true"])
    results = {
        "intercept": float(intercept),
        "sigma2": float(sigma2),
        "N": int(N),
        "scored": count,
        "selection_rate": preq_hits / count if count else None,
        "batch_selection_rate": batch_hits / count if count else None,
        "replicate_results": [o.value for o in ok],
    }
    return results, diagnostics
