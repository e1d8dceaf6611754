"""
Normal linear model Y ~ N(X theta, sigma2 I) with known sigma2: Hyvarinen scores under improper
and proper normal priors, AIC, and the prequential Hyvarinen score.

These scores use the doubled Hyvarinen convention 2 Delta ln q + |grad ln q|^2 throughout.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np
from loguru import logger
from scipy.linalg import qr

from scorelab.errors import CapabilityError, DomainError, RankDeficiencyError, SpecificationError
from scorelab.estimation.families import ParametricFamily
from scorelab.modelsel.bayes import BayesModelSpec
from scorelab.modelsel.priors import FlatPrior, NormalPrior
from scorelab.numerics.linalg import require_symmetric, solve_spd, spd_inverse
from scorelab.numerics.quadrature import Grid1D
from scorelab.scores.distributions import DensityModel

RANK_TOL = 1e-10


def design_rank(X: np.ndarray, tol: float = RANK_TOL) -> int:
    """Numerical rank from a column-pivoted QR."""
    if X.shape[1] == 0:
        return 0
    R = qr(X, mode="r", pivoting=True)[0]
    diag = np.abs(np.diag(R))
    if diag.size == 0 or diag[0] == 0:
        return 0
    return int(np.count_nonzero(diag > tol * diag[0]))


@dataclass(frozen=True)
class NormalLinearModel:
    X: np.ndarray
    sigma2: float
    prior_mean: Optional[np.ndarray] = None
    prior_cov: Optional[np.ndarray] = None
    label: str = ""

    def __post_init__(self) -> None:
        X = np.asarray(self.X, dtype=float)
        if X.ndim == 1:
            X = X.reshape(-1, 1)
        if X.ndim != 2 or X.shape[0] < 1:
            raise SpecificationError(f"Design must be an (N, p) matrix, got shape {X.shape}")
        if not np.all(np.isfinite(X)):
            raise SpecificationError("Design entries must be finite")
        if not (np.isfinite(self.sigma2) and self.sigma2 > 0):
            raise SpecificationError(f"sigma2 must be positive, got {self.sigma2}")
        rank = design_rank(X)
        if rank < X.shape[1]:
            raise SpecificationError(f"Design has rank {rank} < p={X.shape[1]}")
        X = X.copy()
        X.setflags(write=False)
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "sigma2", float(self.sigma2))
        if (self.prior_mean is None) != (self.prior_cov is None):
            raise SpecificationError("Proper prior needs both a mean and a covariance")
        if self.prior_mean is not None:
            m = np.atleast_1d(np.asarray(self.prior_mean, dtype=float)).ravel()
            V = require_symmetric(np.atleast_2d(np.asarray(self.prior_cov, dtype=float)), name="prior covariance")
            if m.size != self.p or V.shape != (self.p, self.p):
                raise SpecificationError(f"Prior mean/cov must have p={self.p} components")
            object.__setattr__(self, "prior_mean", m)
            object.__setattr__(self, "prior_cov", V)

    @property
    def N(self) -> int:
        return int(self.X.shape[0])

    @property
    def p(self) -> int:
        return int(self.X.shape[1])

    @property
    def nu(self) -> int:
        return self.N - self.p

    def _y(self, y) -> np.ndarray:
        y = np.asarray(y, dtype=float).ravel()
        if y.size != self.N:
            raise SpecificationError(f"Response has {y.size} entries, design has N={self.N} rows")
        if not np.all(np.isfinite(y)):
            raise SpecificationError("Response entries must be finite")
        return y

    def fit(self, y) -> np.ndarray:
        y = self._y(y)
        if self.p == 0:
            return np.zeros(0)
        return np.linalg.lstsq(self.X, y, rcond=None)[0]

    def rss(self, y) -> float:
        """y' Pi y with Pi the projection onto the residual space."""
        y = self._y(y)
        r = y - self.X @ self.fit(y) if self.p else y
        return float(r @ r)


def nlm_improper_hyvarinen(model: NormalLinearModel, y) -> float:
    """(RSS - 2 nu sigma2) / sigma2^2 under the flat-prior limit."""
    if model.nu <= 0:
        raise DomainError(f"Improper-prior score is not defined for nu = N - p = {model.nu}")
    s2 = model.sigma2
    return (model.rss(y) - 2.0 * model.nu * s2) / (s2 * s2)


def proper_precision(model: NormalLinearModel) -> np.ndarray:
    """Phi = sigma2^-1 {I - X (X'X + sigma2 V^-1)^-1 X'}, the precision of the marginal of y."""
    if model.prior_cov is None:
        raise SpecificationError("Proper-prior score needs prior_mean and prior_cov")
    X, s2 = model.X, model.sigma2
    inner = X.T @ X + s2 * spd_inverse(model.prior_cov)
    return (np.eye(model.N) - X @ solve_spd(inner, X.T)) / s2


def nlm_proper_hyvarinen(model: NormalLinearModel, y) -> float:
    """|Phi (y - X m)|^2 - 2 tr Phi for the marginal y ~ N(X m, Phi^-1)."""
    y = model._y(y)
    phi = proper_precision(model)
    g = phi @ (y - model.X @ model.prior_mean)
    return float(g @ g - 2.0 * np.trace(phi))


def aic(model: NormalLinearModel, y) -> float:
    """RSS / sigma2 + 2p."""
    return model.rss(y) / model.sigma2 + 2.0 * model.p


def aic_gap(model: NormalLinearModel, y) -> float:
    """sigma2 · (improper Hyvarinen score) - AIC; equals -2N for every model."""
    return nlm_improper_hyvarinen(model, y) * model.sigma2 - aic(model, y)


def _burn_in(X: np.ndarray) -> None:
    p = X.shape[1]
    for n in range(1, p + 1):
        if design_rank(X[:n]) < n:
            raise RankDeficiencyError(n, f"Burn-in rows do not reach full rank: rank stalls at row {n}")


def prequential_hyvarinen(model: NormalLinearModel, y) -> float:
    """
    Sum over n > p of (Z_n^2 - 2 sigma2) / (k_n^2 sigma2^2), where Z_n = e_n/k_n standardizes the
    one-step prediction error e_n from the least-squares fit on rows 1..n-1 and
    k_n^2 = 1 + x_n' (X_{n-1}' X_{n-1})^-1 x_n.
    """
    y = model._y(y)
    X, p, s2 = model.X, model.p, model.sigma2
    _burn_in(X)
    total = 0.0
    if p == 0:
        return float(np.sum((y * y - 2.0 * s2) / (s2 * s2)))
    A = X[:p].T @ X[:p]
    b = X[:p].T @ y[:p]
    for n in range(p, model.N):
        x = X[n]
        beta = np.linalg.solve(A, b)
        k2 = 1.0 + float(x @ np.linalg.solve(A, x))
        e = float(y[n] - x @ beta)
        total += (e * e / k2 - 2.0 * s2) / (k2 * s2 * s2)
        A = A + np.outer(x, x)
        b = b + x * y[n]
    return float(total)


def linear_family(X: np.ndarray, sigma2: float) -> ParametricFamily:
    """theta -> N(X theta, sigma2 I) as a density on R^N."""
    X = np.asarray(X, dtype=float)
    N, p = X.shape
    s2 = float(sigma2)
    log_norm = -0.5 * N * np.log(2.0 * np.pi * s2)

    def density_at(theta: np.ndarray) -> DensityModel:
        mean = X @ theta
        return DensityModel(
            log_density=lambda pts: log_norm - 0.5 * np.sum((pts - mean) ** 2, axis=1) / s2,
            dimension=N,
            gradient_log_density=lambda pts: -(pts - mean) / s2,
            laplacian_log_density=lambda pts: np.full(pts.shape[0], -N / s2),
            label=f"linear(p={p})",
        )

    def batch(x0: np.ndarray, thetas: np.ndarray):
        resid = np.asarray(x0, dtype=float).reshape(1, N) - thetas @ X.T
        logp = log_norm - 0.5 * np.sum(resid * resid, axis=1) / s2
        return logp, -resid / s2, np.full(thetas.shape[0], -N / s2)

    return ParametricFamily(
        name=f"normal-linear(p={p})",
        dimension=p,
        density_at=density_at,
        bounds=tuple((None, None) for _ in range(p)),
        kind="normal-linear",
        batch=batch,
    )


def linear_bayes_model(model: NormalLinearModel, y, prior=None, points: int = 201, halfwidth: float = 8.0) -> BayesModelSpec:
    """
    The linear model as a BayesModelSpec, with the quadrature box centred on the conjugate
    posterior (flat prior unless the model carries a normal prior).
    """
    if not 1 <= model.p <= 2:
        raise CapabilityError(f"Posterior quadrature needs 1 <= p <= 2, got p={model.p}")
    y = model._y(y)
    X, s2 = model.X, model.sigma2
    if prior is None:
        prior = NormalPrior(model.prior_mean, model.prior_cov) if model.prior_mean is not None else FlatPrior(model.p)
    precision = X.T @ X / s2
    shift = X.T @ y / s2
    if isinstance(prior, NormalPrior):
        P0 = spd_inverse(prior.cov)
        precision = precision + P0
        shift = shift + P0 @ prior.mean
    cov = spd_inverse(precision)
    mean = cov @ shift
    sd = np.sqrt(np.diag(cov))
    domain = tuple(Grid1D.around(m, s, halfwidth, points) for m, s in zip(mean, sd))
    logger.debug("Linear model {} posterior box centred at {}", model.label or f"p={model.p}", mean.tolist())
    return BayesModelSpec(
        family=linear_family(X, s2),
        prior=prior,
        quadrature_domain=domain,
        label=model.label,
    )
