"""
Parametric families {P_theta}: location families with analytic derivatives, a two-parameter
normal, Bernoulli and a degenerate one-point family.
"""

from dataclasses import dataclass
from typing import Callable, Dict, Optional, Sequence, Tuple, Union

import numpy as np
from scipy import stats

from scorelab.errors import CapabilityError, DomainError, SpecificationError
from scorelab.numerics.quadrature import Grid1D
from scorelab.scores.distributions import DensityModel, DiscreteDistribution

ArrayFn = Callable[[np.ndarray], np.ndarray]
Distribution = Union[DensityModel, DiscreteDistribution]
Sampler = Callable[[np.ndarray, np.random.Generator, int], np.ndarray]
Bounds = Tuple[Tuple[Optional[float], Optional[float]], ...]
Batch = Callable[[np.ndarray, np.ndarray], Tuple[np.ndarray, np.ndarray, np.ndarray]]


@dataclass(frozen=True)
class LocationDensity:
    """
    Standardized density f(u) with ln f, (ln f)' and (ln f)''. `span` is the integration range in
    u and `points` its resolution; `f_prime_bounded` records whether f' is bounded on R.
    """

    name: str
    log_f: ArrayFn
    dlog_f: ArrayFn
    d2log_f: ArrayFn
    dist: object
    span: Tuple[float, float]
    points: int
    f_prime_bounded: bool = True

    def f(self, u) -> np.ndarray:
        return np.exp(self.log_f(np.asarray(u, dtype=float)))

    def f_prime(self, u) -> np.ndarray:
        u = np.asarray(u, dtype=float)
        return self.f(u) * self.dlog_f(u)


def _sech2(u: np.ndarray) -> np.ndarray:
    return 1.0 / np.cosh(np.clip(u, -350.0, 350.0)) ** 2


LOCATION_DENSITIES: Dict[str, LocationDensity] = {
    "normal": LocationDensity(
        name="normal",
        log_f=stats.norm.logpdf,
        dlog_f=lambda u: -np.asarray(u, dtype=float),
        d2log_f=lambda u: -np.ones_like(np.asarray(u, dtype=float)),
        dist=stats.norm,
        span=(-8.0, 8.0),
        points=1601,
    ),
    "logistic": LocationDensity(
        name="logistic",
        log_f=stats.logistic.logpdf,
        dlog_f=lambda u: -np.tanh(np.asarray(u, dtype=float) / 2.0),
        d2log_f=lambda u: -0.5 * _sech2(np.asarray(u, dtype=float) / 2.0),
        dist=stats.logistic,
        span=(-40.0, 40.0),
        points=4001,
    ),
    "cauchy": LocationDensity(
        name="cauchy",
        log_f=stats.cauchy.logpdf,
        dlog_f=lambda u: -2.0 * np.asarray(u, dtype=float) / (1.0 + np.asarray(u, dtype=float) ** 2),
        d2log_f=lambda u: -2.0 * (1.0 - np.asarray(u, dtype=float) ** 2) / (1.0 + np.asarray(u, dtype=float) ** 2) ** 2,
        dist=stats.cauchy,
        span=(-400.0, 400.0),
        points=16001,
    ),
    "gumbel": LocationDensity(
        name="gumbel",
        log_f=stats.gumbel_r.logpdf,
        dlog_f=lambda u: -1.0 + np.exp(-np.asarray(u, dtype=float)),
        d2log_f=lambda u: -np.exp(-np.asarray(u, dtype=float)),
        dist=stats.gumbel_r,
        span=(-6.0, 40.0),
        points=4601,
    ),
}


def location_density(name: str) -> LocationDensity:
    try:
        return LOCATION_DENSITIES[str(name).strip().lower()]
    except KeyError:
        raise SpecificationError(f"Unknown location density '{name}'. Known: {', '.join(sorted(LOCATION_DENSITIES))}")


@dataclass(frozen=True)
class ParametricFamily:
    """
    {P_theta}: `density_at(theta)` returns the distribution at theta. `kind` selects registered
    closed-form score gradients ("location", "bernoulli", "degenerate", ...).
    `batch(x0, thetas)`, when present, returns ln p(x0|theta), its x-gradient and x-Laplacian for
    an (m, p) stack of parameters in one call.
    """

    name: str
    dimension: int
    density_at: Callable[[np.ndarray], Distribution]
    bounds: Bounds
    sampler: Optional[Sampler] = None
    kind: str = ""
    location: Optional[LocationDensity] = None
    scale: float = 1.0
    discrete: bool = False
    batch: Optional[Batch] = None

    def __post_init__(self) -> None:
        if int(self.dimension) < 1:
            raise SpecificationError(f"Family dimension must be positive, got {self.dimension}")
        if len(self.bounds) != int(self.dimension):
            raise SpecificationError(f"{self.name}: {len(self.bounds)} bounds for {self.dimension} parameters")

    def theta(self, theta) -> np.ndarray:
        t = np.atleast_1d(np.asarray(theta, dtype=float)).ravel()
        if t.size != self.dimension:
            raise SpecificationError(f"{self.name} has {self.dimension} parameters, got {t.size}")
        return t

    def check_domain(self, theta, interior: bool = False) -> np.ndarray:
        t = self.theta(theta)
        for i, (lo, hi) in enumerate(self.bounds):
            below = lo is not None and (t[i] <= lo if interior else t[i] < lo)
            above = hi is not None and (t[i] >= hi if interior else t[i] > hi)
            if below or above or not np.isfinite(t[i]):
                raise DomainError(f"{self.name}: theta[{i}]={t[i]} outside ({lo}, {hi})")
        return t

    def distribution(self, theta) -> Distribution:
        return self.density_at(self.check_domain(theta))

    def sample(self, theta, rng: np.random.Generator, size: int) -> np.ndarray:
        if self.sampler is None:
            raise CapabilityError(f"Family {self.name} has no sampler")
        return self.sampler(self.check_domain(theta), rng, int(size))

    @property
    def scipy_bounds(self) -> Optional[Sequence[Tuple[Optional[float], Optional[float]]]]:
        if all(lo is None and hi is None for lo, hi in self.bounds):
            return None
        return list(self.bounds)


def location_family(name: str, scale: float = 1.0) -> ParametricFamily:
    """p_theta(x) = f((x - theta)/scale)/scale."""
    desc = location_density(name)
    sigma = float(scale)
    if not sigma > 0:
        raise SpecificationError(f"Location scale must be positive, got {scale}")
    log_sigma = np.log(sigma)
    tail = float(desc.dist.cdf(desc.span[0]) + desc.dist.sf(desc.span[1]))

    def density_at(theta: np.ndarray) -> DensityModel:
        center = float(theta[0])
        return DensityModel(
            log_density=lambda p: desc.log_f((p[:, 0] - center) / sigma) - log_sigma,
            gradient_log_density=lambda p: (desc.dlog_f((p[:, 0] - center) / sigma) / sigma).reshape(-1, 1),
            laplacian_log_density=lambda p: desc.d2log_f((p[:, 0] - center) / sigma) / sigma ** 2,
            domain=Grid1D(center + sigma * desc.span[0], center + sigma * desc.span[1], desc.points),
            tail_mass=tail,
            label=f"{desc.name}({center}, {sigma})",
        )

    def sampler(theta: np.ndarray, rng: np.random.Generator, size: int) -> np.ndarray:
        return float(theta[0]) + sigma * desc.dist.rvs(size=size, random_state=rng)

    def batch(x0: np.ndarray, thetas: np.ndarray):
        u = (float(np.ravel(x0)[0]) - thetas[:, 0]) / sigma
        return desc.log_f(u) - log_sigma, (desc.dlog_f(u) / sigma).reshape(-1, 1), desc.d2log_f(u) / sigma ** 2

    return ParametricFamily(
        name=f"{desc.name}-location",
        dimension=1,
        density_at=density_at,
        bounds=((None, None),),
        sampler=sampler,
        kind="location",
        location=desc,
        scale=sigma,
        batch=batch,
    )


def normal_family() -> ParametricFamily:
    """N(mu, sigma^2) with theta = (mu, sigma^2)."""

    def density_at(theta: np.ndarray) -> DensityModel:
        mu, var = float(theta[0]), float(theta[1])
        log_norm = -0.5 * np.log(2.0 * np.pi * var)
        sd = np.sqrt(var)
        return DensityModel(
            log_density=lambda p: log_norm - 0.5 * (p[:, 0] - mu) ** 2 / var,
            gradient_log_density=lambda p: -(p - mu) / var,
            laplacian_log_density=lambda p: np.full(p.shape[0], -1.0 / var),
            domain=Grid1D(mu - 8.0 * sd, mu + 8.0 * sd, 1601),
            label=f"normal({mu}, {var})",
        )

    def sampler(theta: np.ndarray, rng: np.random.Generator, size: int) -> np.ndarray:
        return rng.normal(float(theta[0]), np.sqrt(float(theta[1])), size=size)

    def batch(x0: np.ndarray, thetas: np.ndarray):
        x = float(np.ravel(x0)[0])
        mu, var = thetas[:, 0], thetas[:, 1]
        with np.errstate(divide="ignore", invalid="ignore"):
            logp = -0.5 * np.log(2.0 * np.pi * var) - 0.5 * (x - mu) ** 2 / var
            return np.where(var > 0, logp, -np.inf), (-(x - mu) / var).reshape(-1, 1), -1.0 / var

    return ParametricFamily(
        name="normal",
        dimension=2,
        density_at=density_at,
        bounds=((None, None), (0.0, None)),
        sampler=sampler,
        kind="normal",
        batch=batch,
    )


def bernoulli_family() -> ParametricFamily:
    """P(X = 1) = theta on labels (0, 1)."""

    def sampler(theta: np.ndarray, rng: np.random.Generator, size: int) -> np.ndarray:
        return rng.binomial(1, float(theta[0]), size=size)

    return ParametricFamily(
        name="bernoulli",
        dimension=1,
        density_at=lambda theta: DiscreteDistribution.binary(float(theta[0])),
        bounds=((0.0, 1.0),),
        sampler=sampler,
        kind="bernoulli",
        discrete=True,
    )


def degenerate_family(label=0) -> ParametricFamily:
    """A one-point distribution whatever the parameter."""
    point = DiscreteDistribution((label,), np.array([1.0]))

    def sampler(theta: np.ndarray, rng: np.random.Generator, size: int) -> np.ndarray:
        return np.full(size, label)

    return ParametricFamily(
        name="degenerate",
        dimension=1,
        density_at=lambda theta: point,
        bounds=((None, None),),
        sampler=sampler,
        kind="degenerate",
        discrete=True,
    )


FAMILY_NAMES = tuple(sorted(LOCATION_DENSITIES)) + ("normal2", "bernoulli", "degenerate")


def family_by_name(name: str, scale: float = 1.0) -> ParametricFamily:
    """Registry lookup; location families also answer to "<name>-location"."""
    key = str(name or "").strip().lower()
    if key.endswith("-location"):
        key = key[: -len("-location")]
    if key in LOCATION_DENSITIES:
        return location_family(key, scale)
    if key == "normal2":
        return normal_family()
    if key == "bernoulli":
        return bernoulli_family()
    if key == "degenerate":
        return degenerate_family()
    raise SpecificationError(f"Unknown family '{name}'. Known: {', '.join(FAMILY_NAMES)}")
