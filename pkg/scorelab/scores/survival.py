"""
Hazard-based score for possibly censored survival times.
"""

from dataclasses import dataclass
from typing import Callable, Optional, Tuple

import numpy as np
from loguru import logger
from scipy.integrate import simpson

from scorelab.errors import DomainError, SpecificationError
from scorelab.numerics.quadrature import Grid1D
from scorelab.numerics.rng import SeedSpec
from scorelab.scores.rules import ConvexFunction

DEFAULT_POINTS = 1601


@dataclass(frozen=True)
class SurvivalObservation:
    m: float
    delta: int

    def __post_init__(self) -> None:
        if not np.isfinite(self.m) or self.m < 0:
            raise SpecificationError(f"Observed time must be finite and >= 0, got {self.m}")
        if int(self.delta) not in (0, 1) or int(self.delta) != self.delta:
            raise SpecificationError(f"Censoring indicator must be 0 or 1, got {self.delta}")
        object.__setattr__(self, "m", float(self.m))
        object.__setattr__(self, "delta", int(self.delta))


@dataclass(frozen=True)
class HazardModel:
    """hazard(u) for a vector of times u >= 0."""

    hazard: Callable[[np.ndarray], np.ndarray]
    label: str = ""

    def at(self, u) -> np.ndarray:
        u = np.atleast_1d(np.asarray(u, dtype=float))
        values = np.asarray(self.hazard(u), dtype=float)
        values = np.broadcast_to(values, u.shape).astype(float)
        bad = np.flatnonzero(~(values >= 0))
        if bad.size:
            raise DomainError(f"Hazard is negative or undefined at u={u[bad[0]]!r} (value={values[bad[0]]})")
        return values


def exponential_hazard(rate: float) -> HazardModel:
    rate = float(rate)
    if not rate > 0:
        raise SpecificationError(f"Exponential rate must be positive, got {rate}")
    return HazardModel(lambda u: np.full(np.shape(u), rate), label=f"exponential({rate})")


def weibull_hazard(shape: float, scale: float) -> HazardModel:
    k, s = float(shape), float(scale)
    if not (k > 0 and s > 0):
        raise SpecificationError(f"Weibull shape and scale must be positive, got ({k}, {s})")
    return HazardModel(lambda u: (k / s) * (np.asarray(u) / s) ** (k - 1.0), label=f"weibull({k}, {s})")


def survival_score(
    obs: SurvivalObservation,
    hazard: HazardModel,
    psi: ConvexFunction,
    grid: Optional[Grid1D] = None,
) -> float:
    """
    int_0^m gamma(lambda(u)) du - psi'(lambda(m))·delta, with gamma(t) = t psi'(t) - psi(t).

    Only the resolution of `grid` is used; the integral always runs over [0, m].
    """
    if psi is None:
        raise SpecificationError("Survival score needs a convex function psi")
    points = int(grid.points) if grid is not None else DEFAULT_POINTS
    integral = 0.0
    if obs.m > 0:
        nodes = Grid1D(0.0, obs.m, points).nodes()
        gamma = psi.gamma(hazard.at(nodes))
        if not np.all(np.isfinite(gamma)):
            raise DomainError(f"Hazard integrand is not finite on [0, {obs.m}]")
        integral = float(simpson(gamma, x=nodes))
    if obs.delta == 0:
        return integral
    lam_m = hazard.at(obs.m)
    with np.errstate(divide="ignore"):
        jump = float(np.asarray(psi.d1(lam_m), dtype=float)[0])
    if np.isnan(jump):
        raise DomainError(f"psi' is undefined at hazard({obs.m}) = {float(lam_m[0])}")
    return integral - jump


def exponential_expected_score(psi: ConvexFunction, model_rate: float, true_rate: float, censor_rate: float) -> float:
    """Exact expected score of a constant-hazard forecast under exponential lifetimes and censoring."""
    mu = np.array([float(model_rate)])
    total = float(true_rate) + float(censor_rate)
    return float((psi.gamma(mu)[0] - float(true_rate) * psi.d1(mu)[0]) / total)


def survival_expected_score(
    psi: ConvexFunction,
    hazard: HazardModel,
    true_rate: float,
    censor_rate: float,
    seed: SeedSpec,
    samples: int = 4000,
    points: int = 201,
) -> Tuple[float, float]:
    """
    Monte Carlo mean and standard error of the survival score of `hazard` when X ~ Exp(true_rate)
    is censored by an independent C ~ Exp(censor_rate).
    """
    if samples < 2:
        raise SpecificationError(f"Need at least 2 samples, got {samples}")
    rng = seed.generator()
    x = rng.exponential(1.0 / float(true_rate), size=samples)
    c = rng.exponential(1.0 / float(censor_rate), size=samples) if censor_rate > 0 else np.full(samples, np.inf)
    grid = Grid1D(0.0, 1.0, points)
    scores = np.array(
        [
            survival_score(SurvivalObservation(min(xi, ci), int(xi <= ci)), hazard, psi, grid)
            for xi, ci in zip(x, c)
        ]
    )
    mean = float(scores.mean())
    se = float(scores.std(ddof=1) / np.sqrt(samples))
    logger.debug("Survival expected score {} ± {} over {} samples", mean, se, samples)
    return mean, se
