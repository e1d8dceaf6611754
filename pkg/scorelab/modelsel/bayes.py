"""
Bayesian model comparison by marginal scores.

Posterior quantities come from tensor-product Simpson quadrature over theta (dimension <= 2). The
log prior is canonicalized against its maximum on the grid. Additive prior constants (`prior_log_offset`
and a prior's own `log_offset`) only enter the reported evidence, never the posterior weights, so
prior scale changes leave Hyvarinen results bit-identical. A constant folded into the values a prior
function returns is rounded with them and cancels only to rounding error.
"""

from dataclasses import dataclass, field, replace
from typing import Any, List, Optional, Sequence, Tuple, Union

import numpy as np
from loguru import logger
from scipy.integrate import simpson
from scipy.special import logsumexp

from scorelab.errors import (
    CapabilityError,
    DivergenceError,
    DomainError,
    ImproperPosteriorError,
    ImproperPriorError,
    SpecificationError,
)
from scorelab.estimation.families import ParametricFamily
from scorelab.modelsel.priors import NormalPrior, PointPrior
from scorelab.numerics.quadrature import Grid1D, tensor_nodes
from scorelab.scores.distributions import DensityModel
from scorelab.scores.evaluate import evaluate_score, hyvarinen_values
from scorelab.scores.rules import RuleFamily, RuleSpec

STABILITY_RTOL = 1e-6
MAX_DOUBLINGS = 3
DEFAULT_POSTERIOR_POINTS = 201


@dataclass(frozen=True)
class BayesModelSpec:
    family: ParametricFamily
    prior: Any
    quadrature_domain: Optional[Tuple[Grid1D, ...]] = None
    prior_log_offset: float = 0.0
    label: str = ""

    def __post_init__(self) -> None:
        if self.prior.dimension != self.family.dimension:
            raise SpecificationError(
                f"Prior dimension {self.prior.dimension} != family dimension {self.family.dimension}"
            )
        if self.family.dimension > 2 and not isinstance(self.prior, PointPrior):
            raise CapabilityError("Posterior quadrature supports at most two parameters")
        if self.quadrature_domain is not None:
            domain = tuple(self.quadrature_domain)
            if len(domain) != self.family.dimension:
                raise SpecificationError(f"{len(domain)} quadrature axes for {self.family.dimension} parameters")
            object.__setattr__(self, "quadrature_domain", domain)

    @property
    def prior_proper(self) -> bool:
        return bool(self.prior.proper)

    def with_prior_shift(self, c: float) -> "BayesModelSpec":
        """Same model with the prior multiplied by e^c."""
        return replace(self, prior_log_offset=self.prior_log_offset + float(c))

    def prior_log_parts(self, thetas) -> Tuple[np.ndarray, float]:
        """(ln pi(theta) without constants, the additive constant) over an (m, p) stack."""
        values = np.asarray(self.prior.log_density(np.atleast_2d(thetas)), dtype=float)
        return values, self.prior_log_offset + float(getattr(self.prior, "log_offset", 0.0))

    def prior_log_density(self, thetas) -> np.ndarray:
        values, offset = self.prior_log_parts(thetas)
        return values + offset

    def domain(self) -> Tuple[Grid1D, ...]:
        if self.quadrature_domain is not None:
            return self.quadrature_domain
        if isinstance(self.prior, NormalPrior):
            sd = np.sqrt(np.diag(self.prior.cov))
            return tuple(Grid1D.around(m, s, 8.0, DEFAULT_POSTERIOR_POINTS) for m, s in zip(self.prior.mean, sd))
        raise SpecificationError(f"Model {self.label or self.family.name} needs a quadrature domain for its prior")


def _likelihood_parts(family: ParametricFamily, x0, thetas: np.ndarray, derivatives: bool):
    """ln p(x0|theta), grad_x and Laplacian_x for each row of thetas."""
    if family.batch is not None:
        logp, grad, lap = family.batch(np.asarray(x0, dtype=float), thetas)
        return np.asarray(logp, dtype=float), np.asarray(grad, dtype=float), np.asarray(lap, dtype=float)
    logps, grads, laps = [], [], []
    for theta in thetas:
        try:
            dist = family.distribution(theta)
        except DomainError:
            logps.append(-np.inf)
            grads.append(None)
            laps.append(np.nan)
            continue
        if isinstance(dist, DensityModel):
            with np.errstate(divide="ignore"):
                logps.append(float(dist.log_q(x0)[0]))
            if derivatives:
                grads.append(dist.gradient(x0)[0])
                laps.append(float(dist.laplacian(x0)[0]))
        else:
            if derivatives:
                raise CapabilityError("Derivatives in x need a continuous family")
            p = dist.prob(x0) if x0 in dist.support else 0.0
            logps.append(float(np.log(p)) if p > 0 else -np.inf)
    logp = np.asarray(logps, dtype=float)
    if not derivatives:
        return logp, None, None
    width = next((g.size for g in grads if g is not None), 1)
    grad = np.array([g if g is not None else np.full(width, np.nan) for g in grads], dtype=float)
    return logp, grad, np.asarray(laps, dtype=float)


@dataclass(frozen=True)
class _Posterior:
    nodes: np.ndarray
    weights: np.ndarray
    log_evidence: float
    logp: np.ndarray
    grad: Optional[np.ndarray]
    lap: Optional[np.ndarray]
    # prior constant, kept out of log_evidence and the weights
    offset: float = 0.0


def _posterior_on(model: BayesModelSpec, x0, domain: Sequence[Grid1D], derivatives: bool) -> _Posterior:
    nodes, w = tensor_nodes(list(domain))
    logp, grad, lap = _likelihood_parts(model.family, x0, nodes, derivatives)
    base, offset = model.prior_log_parts(nodes)
    top = float(np.max(base[np.isfinite(base)])) if np.any(np.isfinite(base)) else 0.0
    with np.errstate(divide="ignore"):
        log_int = logp + (base - top) + np.log(w)
    log_z = float(logsumexp(log_int))
    if not np.isfinite(log_z):
        raise ImproperPosteriorError(f"Posterior normalizer is not finite for {model.label or model.family.name}")
    weights = np.exp(log_int - log_z)
    return _Posterior(nodes, weights, log_z + top, logp, grad, lap, offset)


def _doubled(domain: Sequence[Grid1D]) -> Tuple[Grid1D, ...]:
    return tuple(g.doubled() for g in domain)


def posterior(model: BayesModelSpec, x0, derivatives: bool = False) -> _Posterior:
    """Quadrature posterior on the model domain, checked for stability under domain doubling."""
    domain = model.domain()
    current = _posterior_on(model, x0, domain, derivatives)
    for _ in range(MAX_DOUBLINGS):
        domain = _doubled(domain)
        wider = _posterior_on(model, x0, domain, False)
        if abs(np.expm1(wider.log_evidence - current.log_evidence)) <= STABILITY_RTOL:
            return current
        logger.debug("Evidence moved under domain doubling ({} -> {})", current.log_evidence, wider.log_evidence)
        current = _posterior_on(model, x0, domain, derivatives) if derivatives else wider
    message = f"Marginal integral for {model.label or model.family.name} does not stabilize under domain doubling"
    if model.prior_proper:
        raise DivergenceError(message)
    raise ImproperPosteriorError(message)


@dataclass(frozen=True)
class MarginalDensity:
    value: float
    log_value: float
    scale_arbitrary: bool


def marginal_density(model: BayesModelSpec, x0) -> MarginalDensity:
    """p_M(x0) = int p(x0|theta) pi(theta) dtheta; scale-arbitrary under an improper prior."""
    if isinstance(model.prior, PointPrior):
        logp, _, _ = _likelihood_parts(model.family, x0, model.prior.theta0[None, :], False)
        log_value = float(logp[0]) + model.prior_log_offset
    else:
        post = posterior(model, x0)
        log_value = post.log_evidence + post.offset
    if not model.prior_proper:
        logger.info("Marginal density of {} is defined only up to the prior constant", model.label or model.family.name)
    return MarginalDensity(float(np.exp(log_value)), log_value, not model.prior_proper)


def _require_proper(*models: BayesModelSpec) -> None:
    for m in models:
        if not m.prior_proper:
            raise ImproperPriorError(
                f"Model {m.label or m.family.name} has an improper prior: its marginal carries an arbitrary "
                "constant c_M, so Bayes factors and non-homogeneous scores are undefined"
            )


def log_bayes_factor(model_a: BayesModelSpec, model_b: BayesModelSpec, x0) -> float:
    _require_proper(model_a, model_b)
    return marginal_density(model_a, x0).log_value - marginal_density(model_b, x0).log_value


@dataclass(frozen=True)
class PosteriorMoments:
    mean: np.ndarray
    cov: np.ndarray
    log_evidence: Optional[float] = None


def posterior_moments(model: BayesModelSpec, x0) -> PosteriorMoments:
    if isinstance(model.prior, PointPrior):
        p = model.prior.dimension
        return PosteriorMoments(model.prior.theta0.copy(), np.zeros((p, p)))
    post = posterior(model, x0)
    mean = post.weights @ post.nodes
    d = post.nodes - mean[None, :]
    cov = (d * post.weights[:, None]).T @ d
    return PosteriorMoments(mean, 0.5 * (cov + cov.T), post.log_evidence + post.offset)


def hyvarinen_predictive_parts(model: BayesModelSpec, x0) -> Tuple[float, float]:
    """
    (E[S_H(x0, P_theta) | x0], 1/2 sum_i var[d ln p(x0|theta)/dx_i | x0]); their sum is the
    Hyvarinen score of the marginal at x0.
    """
    if isinstance(model.prior, PointPrior):
        dist = model.family.distribution(model.prior.theta0)
        return float(hyvarinen_values(dist, x0)[0]), 0.0
    try:
        post = posterior(model, x0, derivatives=True)
    except DivergenceError as e:
        raise ImproperPosteriorError(str(e))
    w = post.weights
    live = w > 0
    w, grad, lap = w[live], post.grad[live], post.lap[live]
    if not (np.all(np.isfinite(grad)) and np.all(np.isfinite(lap))):
        raise DomainError("Likelihood derivatives are not finite where the posterior has mass")
    expected = float(w @ (lap + 0.5 * np.sum(grad * grad, axis=1)))
    mean_grad = w @ grad
    variance = float(w @ np.sum(grad * grad, axis=1) - mean_grad @ mean_grad)
    return expected, 0.5 * max(variance, 0.0)


def hyvarinen_predictive_score(model: BayesModelSpec, x0) -> float:
    expected, variance = hyvarinen_predictive_parts(model, x0)
    return expected + variance


def _bregman_marginal_score(rule: RuleSpec, model: BayesModelSpec, x0) -> float:
    if model.family.discrete:
        raise CapabilityError("Integral scores of marginals need a continuous one-dimensional family")
    grid = rule.grid
    if grid is None:
        raise SpecificationError(f"{rule.family.value} marginal score needs an integration grid on the rule")
    domain = model.domain()
    nodes, w = tensor_nodes(list(domain))
    with np.errstate(divide="ignore"):
        log_prior = model.prior_log_density(nodes) + np.log(w)

    def log_marginal(x: float) -> float:
        logp, _, _ = _likelihood_parts(model.family, np.array([x]), nodes, False)
        return float(logsumexp(logp + log_prior))

    psi = rule.effective_psi()
    xs = grid.nodes()
    q = np.exp([log_marginal(x) for x in xs])
    q0 = np.exp(np.array([log_marginal(float(np.ravel(x0)[0]))]))
    integral = -float(simpson(psi.legendre_term(q) - psi.value_at_zero, x=xs))
    with np.errstate(divide="ignore"):
        return float(-np.asarray(psi.d1(q0), dtype=float)[0] + integral)


def marginal_score(rule: RuleSpec, model: BayesModelSpec, x0) -> float:
    """SF(M) = S(x0, P_M) for the marginal (predictive) distribution of model M."""
    fam = rule.family
    if fam == RuleFamily.HYVARINEN:
        return hyvarinen_predictive_score(model, x0)
    _require_proper(model)
    if isinstance(model.prior, PointPrior):
        return evaluate_score(rule, x0, model.family.distribution(model.prior.theta0))
    if fam == RuleFamily.LOG:
        return -marginal_density(model, x0).log_value
    if fam in (RuleFamily.BRIER, RuleFamily.TSALLIS, RuleFamily.BREGMAN):
        return _bregman_marginal_score(rule, model, x0)
    raise CapabilityError(f"{fam.value} rule is not supported for marginal scores")


def score_difference(rule: RuleSpec, model_a: BayesModelSpec, model_b: BayesModelSpec, x0) -> float:
    """SD = S(x0, P_A) - S(x0, P_B); negative favours A."""
    return marginal_score(rule, model_a, x0) - marginal_score(rule, model_b, x0)


@dataclass(frozen=True)
class ModelScore:
    model_id: str
    score: Optional[float]
    scale_arbitrary: bool
    errors: List[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "model_id": self.model_id,
            "score": self.score,
            "scale_arbitrary": self.scale_arbitrary,
            "errors": list(self.errors),
        }


@dataclass(frozen=True)
class ModelComparisonReport:
    rule: str
    entries: List[ModelScore]
    differences: List[List[Optional[float]]]
    ranking: List[str]
    ties: List[Tuple[str, str]]

    def to_dict(self) -> dict:
        return {
            "rule": self.rule,
            "models": [e.to_dict() for e in self.entries],
            "differences": {
                "model_ids": [e.model_id for e in self.entries],
                "matrix": self.differences,
            },
            "ranking": list(self.ranking),
            "ties": [list(t) for t in self.ties],
        }


ModelEntry = Union[BayesModelSpec, Tuple[str, BayesModelSpec]]


def _named(models: Sequence[ModelEntry]) -> List[Tuple[str, BayesModelSpec]]:
    named = []
    for i, m in enumerate(models):
        if isinstance(m, tuple):
            named.append((str(m[0]), m[1]))
        else:
            named.append((m.label or f"model-{i}", m))
    return named


def compare_models(rule: RuleSpec, models: Sequence[ModelEntry], x0, pool=None) -> ModelComparisonReport:
    """
    SF(M) for every model, pairwise differences SD[i][j] = SF_i - SF_j and an ascending ranking.
    A model that fails is recorded with its error; the others are still scored.
    """
    named = _named(models)

    def score_one(i: int) -> float:
        return marginal_score(rule, named[i][1], x0)

    if pool is not None:
        outcomes = pool.map(score_one, len(named))
        results = [(o.value, [o.error] if o.error else []) for o in outcomes]
    else:
        results = []
        for i in range(len(named)):
            try:
                results.append((score_one(i), []))
            except Exception as e:
                logger.error("Model {} failed: {}", named[i][0], e)
                results.append((None, [f"{type(e).__name__}: {e}"]))

    entries = [
        ModelScore(model_id, None if value is None else float(value), not spec.prior_proper, errors)
        for (model_id, spec), (value, errors) in zip(named, results)
    ]
    scores = [e.score for e in entries]
    differences = [
        [None if a is None or b is None else a - b for b in scores]
        for a in scores
    ]
    scored = [i for i, s in enumerate(scores) if s is not None]
    order = sorted(scored, key=lambda i: (scores[i], i))
    ties = [
        (entries[i].model_id, entries[j].model_id)
        for k, i in enumerate(order)
        for j in order[k + 1:]
        if scores[i] == scores[j]
    ]
    logger.info("Compared {} models under {}: ranking {}", len(entries), rule.family.value, [entries[i].model_id for i in order])
    return ModelComparisonReport(
        rule=rule.family.value,
        entries=entries,
        differences=differences,
        ranking=[entries[i].model_id for i in order],
        ties=ties,
    )
