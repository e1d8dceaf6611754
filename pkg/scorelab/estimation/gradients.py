"""
Score gradients s(x, theta) = grad_theta S(x, P_theta).

Closed forms are looked up in a registry keyed by (rule family, family kind); everything else
falls back to central differences of S in theta.
"""

from typing import Callable, Dict, Optional, Tuple

import numpy as np
from loguru import logger

from scorelab.errors import DomainError
from scorelab.estimation.families import ParametricFamily
from scorelab.numerics.differences import finite_diff_jacobian
from scorelab.scores.evaluate import score_vector
from scorelab.scores.rules import RuleFamily, RuleSpec

ClosedForm = Callable[[RuleSpec, ParametricFamily, object, np.ndarray], np.ndarray]

_CLOSED_FORMS: Dict[Tuple[RuleFamily, str], ClosedForm] = {}


def register_closed_form(rule_family: RuleFamily, family_kind: str, fn: ClosedForm) -> None:
    """fn(rule, family, xs, theta) -> (m, p) array of gradients."""
    _CLOSED_FORMS[(RuleFamily(rule_family), str(family_kind))] = fn


def closed_form_for(rule: RuleSpec, family: ParametricFamily) -> Optional[ClosedForm]:
    return _CLOSED_FORMS.get((rule.family, family.kind))


def _location_gradient(rule: RuleSpec, family: ParametricFamily, xs, theta: np.ndarray) -> np.ndarray:
    """psi''(f(u)) f'(u) with u = x - theta, computed as [t psi''(t)]_{t=f} · (ln f)'."""
    desc, sigma = family.location, family.scale
    u = (np.asarray(xs, dtype=float).reshape(-1) - float(theta[0])) / sigma
    log_f = desc.log_f(u) - np.log(sigma)
    dlog = desc.dlog_f(u) / sigma
    psi = rule.effective_psi()
    return (psi.t_times_d2(log_f) * dlog).reshape(-1, 1)


def _bernoulli_log(rule: RuleSpec, family: ParametricFamily, xs, theta: np.ndarray) -> np.ndarray:
    q = np.float64(theta[0])
    x = np.asarray(xs, dtype=float).reshape(-1)
    with np.errstate(divide="ignore"):
        g = np.where(x == 1, -1.0 / q, 1.0 / (1.0 - q))
    return g.reshape(-1, 1)


def _bernoulli_brier(rule: RuleSpec, family: ParametricFamily, xs, theta: np.ndarray) -> np.ndarray:
    x = np.asarray(xs, dtype=float).reshape(-1)
    return (2.0 * (float(theta[0]) - x)).reshape(-1, 1)


def _constant(rule: RuleSpec, family: ParametricFamily, xs, theta: np.ndarray) -> np.ndarray:
    return np.zeros((len(xs), family.dimension))


for _rf in (RuleFamily.LOG, RuleFamily.BRIER, RuleFamily.TSALLIS, RuleFamily.BREGMAN):
    register_closed_form(_rf, "location", _location_gradient)
for _rf in (RuleFamily.LOG, RuleFamily.BRIER, RuleFamily.TSALLIS, RuleFamily.BREGMAN, RuleFamily.FROM_LOSS):
    register_closed_form(_rf, "degenerate", _constant)
register_closed_form(RuleFamily.LOG, "bernoulli", _bernoulli_log)
register_closed_form(RuleFamily.BRIER, "bernoulli", _bernoulli_brier)


def as_observations(family: ParametricFamily, xs):
    if family.discrete:
        return list(np.asarray(xs).reshape(-1).tolist()) if not isinstance(xs, list) else xs
    return np.asarray(xs, dtype=float)


def score_gradients(rule: RuleSpec, family: ParametricFamily, xs, theta, closed_form: bool = True) -> np.ndarray:
    """
    (m, p) gradients for m observations. Rows where S(x, theta) is infinite are +inf.
    """
    theta = family.check_domain(theta)
    xs = as_observations(family, xs)
    values = score_vector(rule, xs, family.density_at(theta))
    infinite = np.isinf(values)

    fn = closed_form_for(rule, family) if closed_form else None
    if fn is not None:
        grads = np.asarray(fn(rule, family, xs, theta), dtype=float).reshape(len(values), family.dimension)
    else:
        grads = np.full((len(values), family.dimension), np.inf)
        live = np.flatnonzero(~infinite)
        if live.size:
            subset = [xs[i] for i in live] if family.discrete else xs[live]
            try:
                grads[live] = finite_diff_jacobian(
                    lambda t: score_vector(rule, subset, family.distribution(t)), theta
                ).reshape(live.size, family.dimension)
            except DomainError as e:
                logger.debug("Finite-difference score gradient failed at theta={}: {}", theta.tolist(), e)
                raise
    grads[infinite] = np.inf
    return grads


def score_gradient(rule: RuleSpec, family: ParametricFamily, x, theta) -> np.ndarray:
    xs = [x] if family.discrete else np.asarray([x], dtype=float)
    return score_gradients(rule, family, xs, theta)[0]
