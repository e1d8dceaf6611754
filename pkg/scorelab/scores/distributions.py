"""
Distributions a scoring rule can be quoted against: finite-support probability vectors and
(possibly unnormalized) continuous densities.
"""

from dataclasses import dataclass, replace
from pathlib import Path
from typing import Callable, Hashable, Iterable, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from scipy.special import logsumexp

from scorelab.errors import DomainError, SchemaError, SpecificationError
from scorelab.numerics.differences import curvature_step, default_step
from scorelab.numerics.quadrature import Grid1D, integrate

PROB_SUM_TOL = 1e-12
NORMALIZATION_TOL = 1e-6
DERIVATIVE_ATOL = 1e-4
DERIVATIVE_RTOL = 1e-3

Points = np.ndarray
ArrayFn = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class DiscreteDistribution:
    support: Tuple[Hashable, ...]
    probs: np.ndarray

    def __post_init__(self) -> None:
        support = tuple(self.support)
        probs = np.asarray(self.probs, dtype=float).ravel().copy()
        if len(support) == 0:
            raise SpecificationError("Distribution support is empty")
        if len(set(support)) != len(support):
            raise SpecificationError(f"Support labels must be unique: {support}")
        if probs.size != len(support):
            raise SpecificationError(f"{len(support)} labels but {probs.size} probabilities")
        if not np.all(np.isfinite(probs)) or np.any(probs < 0):
            raise SpecificationError(f"Probabilities must be finite and non-negative: {probs.tolist()}")
        if abs(float(probs.sum()) - 1.0) > PROB_SUM_TOL * max(1, probs.size):
            raise SpecificationError(f"Probabilities sum to {probs.sum()!r}, not 1")
        probs.setflags(write=False)
        object.__setattr__(self, "support", support)
        object.__setattr__(self, "probs", probs)

    @classmethod
    def uniform(cls, support: Sequence[Hashable]) -> "DiscreteDistribution":
        n = len(support)
        return cls(tuple(support), np.full(n, 1.0 / n))

    @classmethod
    def binary(cls, q: float) -> "DiscreteDistribution":
        """Distribution on (0, 1) with P(X=1) = q."""
        return cls((0, 1), np.array([1.0 - float(q), float(q)]))

    @property
    def size(self) -> int:
        return len(self.support)

    def index(self, x: Hashable) -> int:
        try:
            return self.support.index(x)
        except ValueError:
            raise DomainError(f"Observation {x!r} is not in the support {self.support}")

    def prob(self, x: Hashable) -> float:
        return float(self.probs[self.index(x)])

    def aligned(self, labels: Sequence[Hashable]) -> np.ndarray:
        """Probabilities re-ordered to `labels` (labels missing here get 0)."""
        lookup = dict(zip(self.support, self.probs))
        extra = set(self.support) - set(labels)
        if any(lookup[k] > 0 for k in extra):
            raise DomainError(f"Labels {sorted(map(str, extra))} carry mass but are not in {tuple(labels)}")
        return np.array([float(lookup.get(k, 0.0)) for k in labels])

    def mix(self, other: "DiscreteDistribution", alpha: float) -> "DiscreteDistribution":
        """alpha·self + (1-alpha)·other on a common support."""
        if self.support != other.support:
            raise SpecificationError("Mixing needs identical supports")
        probs = float(alpha) * self.probs + (1.0 - float(alpha)) * other.probs
        return DiscreteDistribution(self.support, probs / probs.sum())


def load_discrete_csv(path: Union[str, Path]) -> DiscreteDistribution:
    """CSV with a mandatory `label,probability` header."""
    frame = pd.read_csv(path, dtype=str, keep_default_na=False)
    columns = [c.strip().lower() for c in frame.columns]
    if columns[:2] != ["label", "probability"]:
        raise SchemaError(f"{path}: expected header 'label,probability', got {','.join(frame.columns)}")
    labels, probs = [], []
    for row_no, (label, token) in enumerate(zip(frame.iloc[:, 0], frame.iloc[:, 1]), start=2):
        try:
            probs.append(float(token))
        except ValueError:
            raise SchemaError(f"{path}: probability is not numeric", row=row_no, column="probability", token=token)
        labels.append(label.strip())
    return DiscreteDistribution(tuple(labels), np.array(probs))


def as_points(x, dimension: int) -> np.ndarray:
    """Observations as an (m, dimension) array."""
    arr = np.asarray(x, dtype=float)
    if dimension == 1:
        return arr.reshape(-1, 1)
    if arr.ndim == 1:
        if arr.size != dimension:
            raise DomainError(f"Point has {arr.size} coordinates, model dimension is {dimension}")
        return arr.reshape(1, dimension)
    if arr.shape[-1] != dimension:
        raise DomainError(f"Points have {arr.shape[-1]} coordinates, model dimension is {dimension}")
    return arr.reshape(-1, dimension)


@dataclass(frozen=True)
class DensityModel:
    """
    Evaluator bundle for a density q on R^d.

    Callables take an (m, d) array of points. `log_density` returns (m,), `gradient_log_density`
    returns (m, d) and `laplacian_log_density` returns (m,). Missing derivatives fall back to
    central differences of `log_density`. `log_offset` is an additive constant on ln q that
    derivative-based (homogeneous) scores never read. A constant added inside `log_density` itself
    leaves analytic derivatives untouched. Under the difference fallback it moves the gradient by
    about |c| eps / h and the Laplacian by about 4 |c| eps / h^2, under 1e-5 for |c| <= 10 near the
    origin.
    """

    log_density: ArrayFn
    dimension: int = 1
    gradient_log_density: Optional[ArrayFn] = None
    laplacian_log_density: Optional[ArrayFn] = None
    normalized: bool = True
    domain: Optional[Grid1D] = None
    log_offset: float = 0.0
    # probability outside `domain`, for normalization checks
    tail_mass: float = 0.0
    label: str = ""

    def __post_init__(self) -> None:
        if int(self.dimension) < 1:
            raise SpecificationError(f"Density dimension must be positive, got {self.dimension}")

    def shifted(self, c: float) -> "DensityModel":
        """Same shape, q scaled by e^c."""
        return replace(self, log_offset=self.log_offset + float(c), normalized=self.normalized and c == 0)

    def with_domain(self, grid: Grid1D) -> "DensityModel":
        return replace(self, domain=grid)

    def log_q(self, x) -> np.ndarray:
        pts = as_points(x, self.dimension)
        values = np.asarray(self.log_density(pts), dtype=float).reshape(-1) + self.log_offset
        return values

    def q(self, x) -> np.ndarray:
        return np.exp(self.log_q(x))

    def gradient(self, x) -> np.ndarray:
        pts = as_points(x, self.dimension)
        if self.gradient_log_density is not None:
            return np.asarray(self.gradient_log_density(pts), dtype=float).reshape(pts.shape)
        return self._fd_gradient(pts)

    def laplacian(self, x) -> np.ndarray:
        pts = as_points(x, self.dimension)
        if self.laplacian_log_density is not None:
            return np.asarray(self.laplacian_log_density(pts), dtype=float).reshape(-1)
        return self._fd_laplacian(pts)

    def validate(self, points=None, tolerance: float = NORMALIZATION_TOL) -> "DensityModel":
        """
        Check the declared normalization over `domain` (plus `tail_mass`) and the supplied
        derivatives against central differences of `log_density`.
        """
        name = self.label or "density"
        if self.normalized and self.domain is not None and self.dimension == 1:
            try:
                mass = integrate(self.q, self.domain) + self.tail_mass
            except DomainError as e:
                raise SpecificationError(f"{name}: cannot integrate the density ({e})")
            if abs(mass - 1.0) > tolerance:
                raise SpecificationError(f"{name} is declared normalized but integrates to {mass:.10g}")
        if self.gradient_log_density is None and self.laplacian_log_density is None:
            return self
        pts = as_points(self._check_points() if points is None else points, self.dimension)
        checks = []
        if self.gradient_log_density is not None:
            checks.append(("gradient", self.gradient, self._fd_gradient))
        if self.laplacian_log_density is not None:
            checks.append(("Laplacian", self.laplacian, self._fd_laplacian))
        for what, supplied, numeric in checks:
            try:
                got, want = np.asarray(supplied(pts)), numeric(pts)
            except DomainError as e:
                raise SpecificationError(f"{name}: cannot check the {what} ({e})")
            limit = np.maximum(DERIVATIVE_ATOL, DERIVATIVE_RTOL * np.abs(want))
            bad = np.argwhere(~(np.abs(got - want) <= limit))
            if bad.size:
                i = int(bad[0][0])
                raise SpecificationError(
                    f"{name}: supplied {what} disagrees with finite differences at {pts[i].tolist()} "
                    f"({np.ravel(got[i]).tolist()} vs {np.ravel(want[i]).tolist()})"
                )
        return self

    def _check_points(self) -> np.ndarray:
        if self.domain is not None and self.dimension == 1:
            quarter = 0.25 * (self.domain.upper - self.domain.lower)
            return np.linspace(self.domain.lower + quarter, self.domain.upper - quarter, 9)
        return np.repeat(np.linspace(-2.0, 2.0, 9)[:, None], self.dimension, axis=1)

    def _base(self, pts: np.ndarray) -> np.ndarray:
        values = np.asarray(self.log_density(pts), dtype=float).reshape(-1)
        if not np.all(np.isfinite(values)):
            raise DomainError("Non-finite log-density on the finite-difference stencil")
        return values

    def _fd_gradient(self, pts: np.ndarray) -> np.ndarray:
        steps = default_step(pts)
        grad = np.empty_like(pts)
        for i in range(self.dimension):
            e = np.zeros_like(pts)
            e[:, i] = steps[:, i]
            grad[:, i] = (self._base(pts + e) - self._base(pts - e)) / (2.0 * steps[:, i])
        return grad

    def _fd_laplacian(self, pts: np.ndarray) -> np.ndarray:
        steps = curvature_step(pts)
        center = self._base(pts)
        total = np.zeros(pts.shape[0])
        for i in range(self.dimension):
            e = np.zeros_like(pts)
            e[:, i] = steps[:, i]
            total += (self._base(pts + e) - 2.0 * center + self._base(pts - e)) / (steps[:, i] ** 2)
        return total


def normal_density(mean: float = 0.0, var: float = 1.0, domain: Optional[Grid1D] = None) -> DensityModel:
    mean, var = float(mean), float(var)
    if var <= 0:
        raise SpecificationError(f"Normal variance must be positive, got {var}")
    log_norm = -0.5 * np.log(2.0 * np.pi * var)

    return DensityModel(
        log_density=lambda p: log_norm - 0.5 * (p[:, 0] - mean) ** 2 / var,
        gradient_log_density=lambda p: -(p - mean) / var,
        laplacian_log_density=lambda p: np.full(p.shape[0], -1.0 / var),
        domain=domain or Grid1D.around(mean, np.sqrt(var)),
        label=f"normal({mean}, {var})",
    )


def normal_mixture_density(
    weights: Iterable[float],
    means: Iterable[float],
    variances: Iterable[float],
    domain: Optional[Grid1D] = None,
) -> DensityModel:
    w = np.asarray(list(weights), dtype=float)
    mu = np.asarray(list(means), dtype=float)
    v = np.asarray(list(variances), dtype=float)
    if not (w.size == mu.size == v.size) or w.size == 0:
        raise SpecificationError("Mixture weights, means and variances must have equal positive length")
    if np.any(w <= 0) or np.any(v <= 0):
        raise SpecificationError("Mixture weights and variances must be positive")
    w = w / w.sum()

    def components(p: np.ndarray) -> np.ndarray:
        u = p[:, :1] - mu[None, :]
        return np.log(w)[None, :] - 0.5 * np.log(2.0 * np.pi * v)[None, :] - 0.5 * u ** 2 / v[None, :]

    def log_density(p: np.ndarray) -> np.ndarray:
        return logsumexp(components(p), axis=1)

    def responsibilities(p: np.ndarray) -> np.ndarray:
        c = components(p)
        return np.exp(c - logsumexp(c, axis=1, keepdims=True))

    def gradient(p: np.ndarray) -> np.ndarray:
        r = responsibilities(p)
        d = -(p[:, :1] - mu[None, :]) / v[None, :]
        return np.sum(r * d, axis=1, keepdims=True)

    def laplacian(p: np.ndarray) -> np.ndarray:
        # (ln q)'' = E_r[d' + d^2] - (E_r d)^2 under the responsibilities r.
        r = responsibilities(p)
        d = -(p[:, :1] - mu[None, :]) / v[None, :]
        first = np.sum(r * d, axis=1)
        return np.sum(r * (-1.0 / v[None, :] + d ** 2), axis=1) - first ** 2

    spread = float(np.sqrt(np.max(v)))
    grid = domain or Grid1D(float(mu.min()) - 8.0 * spread, float(mu.max()) + 8.0 * spread, 1601)
    return DensityModel(
        log_density=log_density,
        gradient_log_density=gradient,
        laplacian_log_density=laplacian,
        domain=grid,
        label="normal-mixture",
    )
