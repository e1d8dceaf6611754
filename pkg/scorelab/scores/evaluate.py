"""
Evaluation of S(x, Q) and the functionals derived from it: expected score, entropy, divergence
and dependence.
"""

from typing import Hashable, List, Optional, Sequence, Tuple, Union

import numpy as np
from loguru import logger
from scipy.integrate import simpson

from scorelab.errors import CapabilityError, DomainError, SpecificationError
from scorelab.numerics.quadrature import Grid1D
from scorelab.scores.distributions import DensityModel, DiscreteDistribution, as_points
from scorelab.scores.rules import LossTable, RuleFamily, RuleSpec

Distribution = Union[DiscreteDistribution, DensityModel]

INTEGRAL_FAMILIES = (RuleFamily.BRIER, RuleFamily.TSALLIS, RuleFamily.BREGMAN)


def rule_from_loss(loss: LossTable) -> RuleSpec:
    return RuleSpec(RuleFamily.FROM_LOSS, loss=loss)


def bayes_act(loss: LossTable, q: np.ndarray) -> np.ndarray:
    """Index of the Bayes act for each column of q (states x M); ties go to the lowest index."""
    expected = loss.loss.T @ np.asarray(q, dtype=float).reshape(len(loss.states), -1)
    return np.argmin(expected, axis=0)


def discrete_score_table(rule: RuleSpec, q: np.ndarray) -> np.ndarray:
    """
    S[x, j] for every support point x and every candidate Q_j, with q laid out as (K, M).
    """
    q = np.asarray(q, dtype=float)
    if q.ndim == 1:
        q = q[:, None]
    fam = rule.family
    with np.errstate(divide="ignore", invalid="ignore"):
        if fam == RuleFamily.LOG:
            return -np.log(q)
        if fam == RuleFamily.BRIER:
            return 0.5 * (1.0 - 2.0 * q + np.sum(q * q, axis=0, keepdims=True))
        if fam == RuleFamily.TSALLIS:
            g = float(rule.gamma)
            return (g - 1.0) * np.sum(q ** g, axis=0, keepdims=True) - g * q ** (g - 1.0)
        if fam == RuleFamily.BREGMAN:
            psi = rule.psi
            d1 = np.asarray(psi.d1(q), dtype=float)
            return -d1 - np.sum(psi.legendre_term(q), axis=0, keepdims=True)
        if fam == RuleFamily.FROM_LOSS:
            acts = bayes_act(rule.loss, q)
            return rule.loss.loss[:, acts]
    raise CapabilityError(f"{fam.value} rule cannot score a finite-support distribution")


def _require_grid(rule: RuleSpec, Q: DensityModel, xs: Optional[np.ndarray] = None) -> Grid1D:
    grid = rule.grid or Q.domain
    if grid is not None:
        return grid
    if xs is not None and xs.size:
        grid = Grid1D.for_data(xs)
        logger.debug("No integration grid configured; using data range [{}, {}]", grid.lower, grid.upper)
        return grid
    raise SpecificationError(f"{rule.family.value} score on a density needs an integration grid")


def integral_term(rule: RuleSpec, Q: DensityModel, grid: Grid1D) -> float:
    """-int [psi(q) - q psi'(q) - psi(0)] dmu, the part of a Bregman-type score not depending on x."""
    if Q.dimension != 1:
        raise CapabilityError(f"{rule.family.value} score needs a one-dimensional density, got d={Q.dimension}")
    psi = rule.effective_psi()
    nodes = grid.nodes()
    q = Q.q(nodes)
    values = psi.legendre_term(q) - psi.value_at_zero
    bad = np.flatnonzero(~np.isfinite(values))
    if bad.size:
        raise DomainError(f"Score integrand is not finite at node {nodes[bad[0]]!r}")
    return -float(simpson(values, x=nodes))


def hyvarinen_values(Q: DensityModel, xs) -> np.ndarray:
    """Laplacian of ln q plus half the squared gradient norm, per point."""
    pts = as_points(xs, Q.dimension)
    grad = Q.gradient(pts)
    return Q.laplacian(pts) + 0.5 * np.sum(grad * grad, axis=1)


def score_vector(rule: RuleSpec, xs, Q: Distribution) -> np.ndarray:
    """S(x_i, Q) for many observations; integral terms are computed once."""
    if rule.family in (RuleFamily.SURVIVAL, RuleFamily.COMPOSITE, RuleFamily.PSEUDO):
        return np.array([evaluate_score(rule, x, Q) for x in xs], dtype=float)
    if isinstance(Q, DiscreteDistribution):
        table = _discrete_table_for(rule, Q)
        labels = _labels_for(rule, Q)
        rows = [_label_index(labels, x) for x in xs]
        return table[rows, 0]

    pts = as_points(xs, Q.dimension)
    fam = rule.family
    if fam == RuleFamily.LOG:
        with np.errstate(divide="ignore"):
            return -Q.log_q(pts)
    if fam == RuleFamily.HYVARINEN:
        return hyvarinen_values(Q, pts)
    if fam in INTEGRAL_FAMILIES:
        grid = _require_grid(rule, Q, pts[:, 0])
        psi = rule.effective_psi()
        with np.errstate(divide="ignore", invalid="ignore"):
            local = -np.asarray(psi.d1(Q.q(pts)), dtype=float)
        return local + integral_term(rule, Q, grid)
    raise CapabilityError(f"{fam.value} rule cannot score a density")


def evaluate_score(rule: RuleSpec, x, Q) -> float:
    """
    S(x, Q). Infinite penalties (e.g. log score at q(x) = 0) come back as inf.

    Survival rules take a SurvivalObservation and a HazardModel, composite rules a list of
    component distributions (one per component) and pseudo rules a conditional family.
    """
    fam = rule.family
    if fam == RuleFamily.SURVIVAL:
        from scorelab.scores.survival import survival_score

        return survival_score(x, Q, rule.psi, rule.grid)
    if fam == RuleFamily.COMPOSITE:
        from scorelab.scores.composite import composite_score

        if len(Q) != len(rule.components):
            raise SpecificationError(f"{len(rule.components)} components but {len(Q)} distributions")
        parts = [(r, subset, dist) for (r, subset), dist in zip(rule.components, Q)]
        return composite_score(x, parts)
    if fam == RuleFamily.PSEUDO:
        from scorelab.scores.composite import pseudo_score

        return pseudo_score(x, Q, rule.base)
    if isinstance(Q, DensityModel) and fam in INTEGRAL_FAMILIES and rule.grid is None and Q.domain is None:
        raise SpecificationError(f"{fam.value} score on a density needs an integration grid")
    xs = [x] if isinstance(Q, DiscreteDistribution) else as_points(x, Q.dimension)
    return float(score_vector(rule, xs, Q)[0])


def _labels_for(rule: RuleSpec, Q: DiscreteDistribution) -> Tuple[Hashable, ...]:
    if rule.family == RuleFamily.FROM_LOSS:
        return rule.loss.states
    return Q.support


def _label_index(labels: Sequence[Hashable], x: Hashable) -> int:
    try:
        return list(labels).index(x)
    except ValueError:
        raise DomainError(f"Observation {x!r} is not in the support {tuple(labels)}")


def _discrete_table_for(rule: RuleSpec, Q: DiscreteDistribution) -> np.ndarray:
    labels = _labels_for(rule, Q)
    return discrete_score_table(rule, Q.aligned(labels)[:, None])


def _common_labels(rule: RuleSpec, P: DiscreteDistribution, Q: DiscreteDistribution) -> List[Hashable]:
    if rule.family == RuleFamily.FROM_LOSS:
        return list(rule.loss.states)
    labels = list(Q.support)
    labels += [k for k in P.support if k not in set(Q.support)]
    return labels


def expected_score(rule: RuleSpec, P: Distribution, Q: Distribution, grid: Optional[Grid1D] = None) -> float:
    """E_{X~P} S(X, Q); zero-probability outcomes contribute nothing."""
    if isinstance(P, DiscreteDistribution) != isinstance(Q, DiscreteDistribution):
        raise SpecificationError("P and Q must both be discrete or both be densities")
    if isinstance(P, DiscreteDistribution):
        labels = _common_labels(rule, P, Q)
        p = P.aligned(labels)
        s = discrete_score_table(rule, Q.aligned(labels)[:, None])[:, 0]
        live = p > 0
        if np.any(np.isinf(s[live])):
            return float(np.inf)
        return float(np.dot(p[live], s[live]))

    grid = grid or rule.grid or P.domain or Q.domain
    if grid is None:
        raise SpecificationError("Expected score over densities needs an integration grid")
    nodes = grid.nodes()
    p = P.q(nodes)
    s = score_vector(rule, nodes, Q if rule.grid or Q.domain else Q.with_domain(grid))
    live = p > 0
    if np.any(np.isinf(s[live])):
        return float(np.inf)
    values = np.where(live, p * np.where(live, s, 0.0), 0.0)
    if not np.all(np.isfinite(values)):
        raise DomainError("Expected-score integrand is not finite on the grid")
    return float(simpson(values, x=nodes))


def entropy(rule: RuleSpec, P: Distribution, grid: Optional[Grid1D] = None) -> float:
    return expected_score(rule, P, P, grid)


def divergence(rule: RuleSpec, P: Distribution, Q: Distribution, grid: Optional[Grid1D] = None) -> float:
    cross = expected_score(rule, P, Q, grid)
    if np.isinf(cross):
        return float(np.inf)
    return cross - entropy(rule, P, grid)


def dependence(rule: RuleSpec, joint: DiscreteDistribution) -> float:
    """H(P_X) - E_U H(P_{X|U}) for a joint over (x, u) pairs."""
    try:
        pairs = [(x, u) for x, u in joint.support]
    except (TypeError, ValueError):
        raise SpecificationError("Joint distribution labels must be (x, u) pairs")
    xs = list(dict.fromkeys(x for x, _ in pairs))
    us = list(dict.fromkeys(u for _, u in pairs))
    table = np.zeros((len(xs), len(us)))
    for (x, u), p in zip(pairs, joint.probs):
        table[xs.index(x), us.index(u)] += p

    px = table.sum(axis=1)
    marginal = DiscreteDistribution(tuple(xs), px / px.sum())
    total = entropy(rule, marginal)
    for j, pu in enumerate(table.sum(axis=0)):
        if pu <= 0:
            continue
        column = table[:, j] / pu
        total -= pu * entropy(rule, DiscreteDistribution(tuple(xs), column / column.sum()))
    return float(total)
