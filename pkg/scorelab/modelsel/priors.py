"""
Prior distributions over theta: flat (improper), normal, point mass, or user supplied.
"""

from dataclasses import dataclass
from typing import Any, Callable

import numpy as np

from scorelab.errors import SpecificationError
from scorelab.numerics.linalg import cholesky_upper, require_symmetric, spd_inverse


@dataclass(frozen=True)
class FlatPrior:
    dimension: int = 1
    proper: bool = False
    name: str = "flat"

    def log_density(self, thetas: np.ndarray) -> np.ndarray:
        return np.zeros(np.atleast_2d(thetas).shape[0])


@dataclass(frozen=True)
class NormalPrior:
    mean: np.ndarray
    cov: np.ndarray
    name: str = "normal"

    def __post_init__(self) -> None:
        mean = np.atleast_1d(np.asarray(self.mean, dtype=float)).ravel()
        cov = require_symmetric(np.atleast_2d(np.asarray(self.cov, dtype=float)), name="prior covariance")
        if cov.shape != (mean.size, mean.size):
            raise SpecificationError(f"Prior covariance shape {cov.shape} does not match mean length {mean.size}")
        U = cholesky_upper(cov)
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", cov)
        object.__setattr__(self, "_precision", spd_inverse(cov))
        object.__setattr__(self, "_log_norm", -0.5 * mean.size * np.log(2.0 * np.pi) - float(np.sum(np.log(np.diag(U)))))

    @property
    def dimension(self) -> int:
        return int(self.mean.size)

    @property
    def proper(self) -> bool:
        return True

    def log_density(self, thetas: np.ndarray) -> np.ndarray:
        d = np.atleast_2d(thetas) - self.mean[None, :]
        return self._log_norm - 0.5 * np.einsum("mi,ij,mj->m", d, self._precision, d)


@dataclass(frozen=True)
class PointPrior:
    theta0: np.ndarray
    name: str = "point"

    def __post_init__(self) -> None:
        object.__setattr__(self, "theta0", np.atleast_1d(np.asarray(self.theta0, dtype=float)).ravel())

    @property
    def dimension(self) -> int:
        return int(self.theta0.size)

    @property
    def proper(self) -> bool:
        return True


@dataclass(frozen=True)
class CustomPrior:
    """
    ln pi(theta) up to an additive constant, vectorized over an (m, p) stack. `log_offset` is added
    to the evidence but never to the values the function returns.
    """

    log_density_fn: Callable[[np.ndarray], np.ndarray]
    dimension: int = 1
    proper: bool = False
    name: str = "custom"
    log_offset: float = 0.0

    def log_density(self, thetas: np.ndarray) -> np.ndarray:
        return np.asarray(self.log_density_fn(np.atleast_2d(thetas)), dtype=float).reshape(-1)


def prior_from_spec(spec: Any, dimension: int) -> Any:
    """
    "flat", {"normal": {"mean": [...], "cov": [[...]]}} or {"point": [...]}.
    """
    if isinstance(spec, str) and spec.strip().lower() == "flat":
        return FlatPrior(dimension=dimension)
    if isinstance(spec, dict) and len(spec) == 1:
        kind, body = next(iter(spec.items()))
        kind = str(kind).strip().lower()
        if kind == "flat":
            return FlatPrior(dimension=dimension)
        if kind == "normal" and isinstance(body, dict):
            return NormalPrior(np.asarray(body.get("mean"), dtype=float), np.asarray(body.get("cov"), dtype=float))
        if kind == "point":
            return PointPrior(np.asarray(body, dtype=float))
    raise SpecificationError(f"Unknown prior spec {spec!r}: expected flat, normal(mean, cov) or point(theta0)")
