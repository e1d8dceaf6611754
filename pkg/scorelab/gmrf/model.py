"""
Tridiagonal Gaussian Markov chain: precision Phi with alpha on the diagonal and beta on the first
off-diagonals, data layout and sufficient statistics.
"""

from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
from loguru import logger

from scorelab.errors import DomainError, SpecificationError
from scorelab.numerics.linalg import cholesky_upper, whiten_solve
from scorelab.numerics.rng import SeedSpec


@dataclass(frozen=True)
class TridiagonalModel:
    alpha: float
    beta: float
    N: int

    def __post_init__(self) -> None:
        if int(self.N) < 1:
            raise SpecificationError(f"Chain length must be positive, got {self.N}")
        if not (np.isfinite(self.alpha) and np.isfinite(self.beta)):
            raise SpecificationError(f"Chain parameters must be finite, got ({self.alpha}, {self.beta})")
        object.__setattr__(self, "alpha", float(self.alpha))
        object.__setattr__(self, "beta", float(self.beta))
        object.__setattr__(self, "N", int(self.N))

    @property
    def in_omega(self) -> bool:
        return self.alpha > 2.0 * abs(self.beta)

    @property
    def lam(self) -> float:
        """lambda = -beta/alpha, the regression of y_i on z_i in the full conditional."""
        if self.alpha == 0:
            raise DomainError("lambda = -beta/alpha is undefined at alpha = 0")
        return -self.beta / self.alpha

    def require_omega(self) -> None:
        if not self.in_omega:
            raise DomainError(
                f"Model outside Omega: needs alpha > 2|beta|, got alpha={self.alpha}, beta={self.beta}"
            )

    def precision(self) -> np.ndarray:
        n = self.N
        phi = np.diag(np.full(n, self.alpha))
        if n > 1:
            idx = np.arange(n - 1)
            phi[idx, idx + 1] = self.beta
            phi[idx + 1, idx] = self.beta
        return phi


@dataclass(frozen=True)
class ChainData:
    """nu vectors of length N stored as a (nu, N) array."""

    y: np.ndarray

    def __post_init__(self) -> None:
        y = np.asarray(self.y, dtype=float)
        if y.ndim == 1:
            y = y.reshape(1, -1)
        if y.ndim != 2 or y.shape[1] < 1 or y.shape[0] < 1:
            raise SpecificationError(f"Chain data must be a vector or a (nu, N) matrix, got shape {y.shape}")
        if not np.all(np.isfinite(y)):
            raise SpecificationError("Chain data must be finite")
        y = y.copy()
        y.setflags(write=False)
        object.__setattr__(self, "y", y)

    @property
    def nu(self) -> int:
        return int(self.y.shape[0])

    @property
    def N(self) -> int:
        return int(self.y.shape[1])

    @property
    def z(self) -> np.ndarray:
        """z_i = y_{i-1} + y_{i+1} with zeros beyond both ends."""
        padded = np.pad(self.y, ((0, 0), (1, 1)))
        return padded[:, :-2] + padded[:, 2:]


@dataclass(frozen=True)
class ChainStatistics:
    c_yz: float
    c_zz: float
    c_yy: float
    c_yy_dot_z: float
    degenerate: bool
    nu: int
    N: int

    def as_tuple(self) -> Tuple[float, float, float, float]:
        return self.c_yz, self.c_zz, self.c_yy, self.c_yy_dot_z


def chain_statistics(data: ChainData) -> ChainStatistics:
    y, z = data.y, data.z
    c_yz = float(np.sum(y * z))
    c_zz = float(np.sum(z * z))
    c_yy = float(np.sum(y * y))
    degenerate = c_zz == 0.0
    c_yy_dot_z = c_yy if degenerate else c_yy - c_yz * c_yz / c_zz
    if degenerate:
        logger.debug("c_zz = 0: lambda is not identified by these data")
    return ChainStatistics(c_yz, c_zz, c_yy, c_yy_dot_z, degenerate, data.nu, data.N)


def tridiag_logdet(model: TridiagonalModel) -> float:
    """
    ln det(Phi) = N ln|beta| + N ln rho + ln(1 - rho^{-2(N+1)}) - ln(1 - rho^{-2}),
    with rho + 1/rho = alpha/|beta| and rho > 1.
    """
    model.require_omega()
    n = model.N
    if model.beta == 0.0:
        return n * float(np.log(model.alpha))
    b = abs(model.beta)
    r = model.alpha / b
    rho = 0.5 * (r + np.sqrt((r - 2.0) * (r + 2.0)))
    log_rho = float(np.log(rho))
    return float(
        n * np.log(b)
        + n * log_rho
        + np.log1p(-np.exp(-2.0 * (n + 1) * log_rho))
        - np.log1p(-np.exp(-2.0 * log_rho))
    )


def quadratic_form(model: TridiagonalModel, data: ChainData) -> float:
    """Sum over vectors of y' Phi y = alpha c_yy + beta c_yz."""
    _check_length(model, data)
    y, z = data.y, data.z
    return float(model.alpha * np.sum(y * y) + model.beta * np.sum(y * z))


def _check_length(model: TridiagonalModel, data: ChainData) -> None:
    if model.N != data.N:
        raise SpecificationError(f"Model has N={model.N} but data vectors have length {data.N}")


def simulate_chain(model: TridiagonalModel, nu: int, seed: SeedSpec, stream: Optional[int] = None) -> ChainData:
    """nu draws from N(0, Phi^-1): solve U y = e with Phi = U'U and e standard normal."""
    model.require_omega()
    if int(nu) < 1:
        raise SpecificationError(f"Need at least one vector, got nu={nu}")
    rng = seed.generator() if stream is None else seed.generator(int(stream))
    U = cholesky_upper(model.precision())
    e = rng.standard_normal((model.N, int(nu)))
    return ChainData(whiten_solve(U, e).T)
