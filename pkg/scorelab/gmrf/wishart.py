"""
Hyvarinen estimation of a precision matrix from a Wishart sum-of-squares matrix S.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np
from loguru import logger

from scorelab.errors import DomainError, NotPositiveDefiniteError, SpecificationError
from scorelab.gmrf.model import ChainData, TridiagonalModel
from scorelab.numerics.linalg import cholesky_upper, require_symmetric, spd_inverse


@dataclass(frozen=True)
class WishartData:
    S: np.ndarray
    nu: int

    def __post_init__(self) -> None:
        S = require_symmetric(self.S, name="S")
        if not np.all(np.isfinite(S)):
            raise SpecificationError("S must be finite")
        if int(self.nu) != self.nu or int(self.nu) < 1:
            raise SpecificationError(f"Degrees of freedom must be a positive integer, got {self.nu}")
        S = S.copy()
        S.setflags(write=False)
        object.__setattr__(self, "S", S)
        object.__setattr__(self, "nu", int(self.nu))

    @property
    def N(self) -> int:
        return int(self.S.shape[0])

    @classmethod
    def from_chain(cls, data: ChainData) -> "WishartData":
        """S = sum of y y' over the nu vectors, summed in lexicographic order of the vectors."""
        y = data.y[np.lexsort(data.y.T[::-1])]
        return cls(y.T @ y, data.nu)

    def multiplier(self) -> float:
        """nu - N - 1, the factor making (nu - N - 1) S^-1 unbiased for Phi."""
        if self.nu < self.N:
            raise DomainError(f"Wishart density does not exist for nu={self.nu} < N={self.N}")
        if self.nu < self.N + 2:
            raise DomainError(f"Estimate needs nu >= N + 2 for a positive multiplier (nu={self.nu}, N={self.N})")
        return float(self.nu - self.N - 1)


@dataclass(frozen=True)
class WishartEstimate:
    in_omega: bool
    phi_hat: Optional[np.ndarray] = None
    alpha_hat: Optional[float] = None
    beta_hat: Optional[float] = None

    def to_dict(self) -> dict:
        return {
            "phi_hat": None if self.phi_hat is None else self.phi_hat.tolist(),
            "alpha_hat": self.alpha_hat,
            "beta_hat": self.beta_hat,
            "in_omega": self.in_omega,
        }


def wishart_objective(phi: np.ndarray, data: WishartData) -> float:
    """sum over ordered (i, j) of ((nu - N - 1) s^{ij} - phi_ij)^2."""
    target = data.multiplier() * spd_inverse(data.S)
    diff = target - np.asarray(phi, dtype=float)
    return float(np.sum(diff * diff))


def tridiagonal(alpha: float, beta: float, n: int) -> np.ndarray:
    return TridiagonalModel(alpha, beta, n).precision()


def wishart_hyvarinen_estimate(data: WishartData, restrict_tridiagonal: bool = False) -> WishartEstimate:
    c = data.multiplier()
    S_inv = spd_inverse(data.S)
    if not restrict_tridiagonal:
        phi = c * S_inv
        try:
            cholesky_upper(phi)
            positive = True
        except NotPositiveDefiniteError:
            positive = False
        return WishartEstimate(in_omega=positive, phi_hat=phi)

    n = data.N
    alpha = c * float(np.mean(np.diag(S_inv)))
    beta = c * float(np.mean(np.diag(S_inv, k=1))) if n > 1 else 0.0
    in_omega = alpha > 2.0 * abs(beta)
    if not in_omega:
        logger.info("Restricted Wishart estimate outside Omega (alpha={}, beta={})", alpha, beta)
    return WishartEstimate(in_omega=in_omega, alpha_hat=alpha, beta_hat=beta)
