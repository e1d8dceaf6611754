"""
Scoring rules as values: rule families, convex generators psi, and loss tables.
"""

from dataclasses import dataclass
from enum import Enum
from typing import Callable, Dict, Hashable, Optional, Sequence, Tuple

import numpy as np

from scorelab.errors import SpecificationError
from scorelab.numerics.quadrature import Grid1D

ArrayFn = Callable[[np.ndarray], np.ndarray]


class RuleFamily(str, Enum):
    LOG = "log"
    BRIER = "brier"
    TSALLIS = "tsallis"
    BREGMAN = "bregman"
    HYVARINEN = "hyvarinen"
    SURVIVAL = "survival"
    COMPOSITE = "composite"
    PSEUDO = "pseudo"
    FROM_LOSS = "from-loss"


@dataclass(frozen=True)
class ConvexFunction:
    """
    psi with its first two derivatives, all vectorized over t >= 0.

    `log_t_d2(log_t)` returns ln(t·psi''(t)) computed from ln t; it keeps t·psi''(t) finite where
    t underflows. `d2_bounded_near_zero` is the symbolic "psi'' bounded on (0, M]" verdict, or
    None when unknown.
    """

    name: str
    psi: ArrayFn
    d1: ArrayFn
    d2: ArrayFn
    value_at_zero: float = 0.0
    log_t_d2: Optional[ArrayFn] = None
    d2_bounded_near_zero: Optional[bool] = None

    def legendre_term(self, t: np.ndarray) -> np.ndarray:
        """psi(t) - t·psi'(t), continuous at t = 0."""
        t = np.asarray(t, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            out = self.psi(t) - t * self.d1(t)
        return np.where(t > 0, out, self.value_at_zero)

    def gamma(self, lam: np.ndarray) -> np.ndarray:
        """lambda·psi'(lambda) - psi(lambda), the hazard-score integrand."""
        return -self.legendre_term(lam)

    def t_times_d2(self, log_t: np.ndarray) -> np.ndarray:
        log_t = np.asarray(log_t, dtype=float)
        if self.log_t_d2 is not None:
            return np.exp(self.log_t_d2(log_t))
        t = np.exp(log_t)
        with np.errstate(invalid="ignore", over="ignore"):
            return np.where(t > 0, t * self.d2(t), 0.0)

    def check_convex(self, upper: float = 10.0, points: int = 2001) -> None:
        t = np.linspace(upper / points, upper, points)
        d2 = np.asarray(self.d2(t), dtype=float)
        if np.any(d2 < -1e-12):
            bad = float(t[np.argmax(d2 < -1e-12)])
            raise SpecificationError(f"psi '{self.name}' is not convex: psi''({bad}) < 0")


def _xlogx(t: np.ndarray) -> np.ndarray:
    t = np.asarray(t, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(t > 0, t * np.log(np.where(t > 0, t, 1.0)), 0.0)


def _tlogt() -> ConvexFunction:
    def d1(t):
        with np.errstate(divide="ignore"):
            return np.log(np.asarray(t, dtype=float)) + 1.0

    def d2(t):
        with np.errstate(divide="ignore"):
            return 1.0 / np.asarray(t, dtype=float)

    return ConvexFunction(
        name="tlogt",
        psi=_xlogx,
        d1=d1,
        d2=d2,
        value_at_zero=0.0,
        log_t_d2=lambda log_t: np.zeros_like(np.asarray(log_t, dtype=float)),
        d2_bounded_near_zero=False,
    )


def power_psi(gamma: float) -> ConvexFunction:
    g = float(gamma)
    if g <= 1:
        raise SpecificationError(f"power psi needs gamma > 1, got {gamma}")
    return ConvexFunction(
        name=f"power:{g:g}",
        psi=lambda t: np.asarray(t, dtype=float) ** g,
        d1=lambda t: g * np.asarray(t, dtype=float) ** (g - 1.0),
        d2=lambda t: g * (g - 1.0) * np.asarray(t, dtype=float) ** (g - 2.0),
        value_at_zero=0.0,
        log_t_d2=lambda log_t: np.log(g * (g - 1.0)) + (g - 1.0) * np.asarray(log_t, dtype=float),
        d2_bounded_near_zero=g >= 2.0,
    )


def brier_psi() -> ConvexFunction:
    """psi(t) = (2t^2 - 1)/4, psi'' = 1."""
    return ConvexFunction(
        name="brier",
        psi=lambda t: (2.0 * np.asarray(t, dtype=float) ** 2 - 1.0) / 4.0,
        d1=lambda t: np.asarray(t, dtype=float),
        d2=lambda t: np.ones_like(np.asarray(t, dtype=float)),
        value_at_zero=-0.25,
        log_t_d2=lambda log_t: np.asarray(log_t, dtype=float),
        d2_bounded_near_zero=True,
    )


def quadratic_psi() -> ConvexFunction:
    """psi(t) = t^2/2; the continuous Brier (quadratic) score."""
    return ConvexFunction(
        name="quadratic",
        psi=lambda t: 0.5 * np.asarray(t, dtype=float) ** 2,
        d1=lambda t: np.asarray(t, dtype=float),
        d2=lambda t: np.ones_like(np.asarray(t, dtype=float)),
        value_at_zero=0.0,
        log_t_d2=lambda log_t: np.asarray(log_t, dtype=float),
        d2_bounded_near_zero=True,
    )


PSI_REGISTRY: Dict[str, Callable[[], ConvexFunction]] = {
    "tlogt": _tlogt,
    "brier": brier_psi,
    "quadratic": quadratic_psi,
}


def convex_function(name: str) -> ConvexFunction:
    """Look up psi by name: tlogt, brier, quadratic or power:<gamma>."""
    key = str(name or "").strip().lower()
    if key.startswith("power:"):
        try:
            return power_psi(float(key.split(":", 1)[1]))
        except ValueError:
            raise SpecificationError(f"Bad power psi '{name}': expected power:<gamma>")
    factory = PSI_REGISTRY.get(key)
    if factory is None:
        known = ", ".join(sorted(PSI_REGISTRY) + ["power:<gamma>"])
        raise SpecificationError(f"Unknown psi '{name}'. Known: {known}")
    return factory()


@dataclass(frozen=True)
class LossTable:
    states: Tuple[Hashable, ...]
    actions: Tuple[Hashable, ...]
    loss: np.ndarray

    def __post_init__(self) -> None:
        states, actions = tuple(self.states), tuple(self.actions)
        loss = np.asarray(self.loss, dtype=float)
        if len(actions) == 0:
            raise SpecificationError("Loss table needs at least one action")
        if len(states) == 0:
            raise SpecificationError("Loss table needs at least one state")
        if loss.shape != (len(states), len(actions)):
            raise SpecificationError(f"Loss matrix shape {loss.shape} != ({len(states)}, {len(actions)})")
        if not np.all(np.isfinite(loss)):
            raise SpecificationError("Loss table entries must be finite")
        loss = loss.copy()
        loss.setflags(write=False)
        object.__setattr__(self, "states", states)
        object.__setattr__(self, "actions", actions)
        object.__setattr__(self, "loss", loss)

    @classmethod
    def zero_one(cls, labels: Sequence[Hashable]) -> "LossTable":
        n = len(labels)
        return cls(tuple(labels), tuple(labels), 1.0 - np.eye(n))


@dataclass(frozen=True)
class RuleSpec:
    family: RuleFamily
    gamma: Optional[float] = None
    psi: Optional[ConvexFunction] = None
    components: Tuple[Tuple["RuleSpec", Tuple[int, ...]], ...] = ()
    loss: Optional[LossTable] = None
    base: Optional["RuleSpec"] = None
    grid: Optional[Grid1D] = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "family", RuleFamily(self.family))
        object.__setattr__(self, "components", tuple((r, tuple(s)) for r, s in self.components))
        self.validate()

    def validate(self) -> None:
        fam = self.family
        if fam == RuleFamily.TSALLIS:
            if self.gamma is None:
                raise SpecificationError("Tsallis rule needs gamma")
            if not float(self.gamma) > 1.0:
                raise SpecificationError(f"Tsallis rule needs gamma > 1, got {self.gamma}")
        if fam in (RuleFamily.BREGMAN, RuleFamily.SURVIVAL):
            if self.psi is None:
                raise SpecificationError(f"{fam.value} rule needs a convex function psi")
            self.psi.check_convex()
        if fam == RuleFamily.COMPOSITE and not self.components:
            raise SpecificationError("Composite rule needs at least one component")
        if fam == RuleFamily.FROM_LOSS and self.loss is None:
            raise SpecificationError("from-loss rule needs a loss table")
        if fam == RuleFamily.PSEUDO and self.base is None:
            raise SpecificationError("Pseudo rule needs a base rule for single sites")

    @property
    def homogeneous(self) -> bool:
        return self.family == RuleFamily.HYVARINEN

    @property
    def strictly_proper(self) -> bool:
        if self.family == RuleFamily.FROM_LOSS:
            return False
        return True

    def effective_psi(self) -> ConvexFunction:
        """The Bregman generator this rule is a case of (continuous Brier is the quadratic score)."""
        if self.family == RuleFamily.BREGMAN:
            return self.psi
        if self.family == RuleFamily.LOG:
            return convex_function("tlogt")
        if self.family == RuleFamily.TSALLIS:
            return power_psi(float(self.gamma))
        if self.family == RuleFamily.BRIER:
            return quadratic_psi()
        raise SpecificationError(f"{self.family.value} rule is not a Bregman-type score")

    @classmethod
    def log(cls) -> "RuleSpec":
        return cls(RuleFamily.LOG)

    @classmethod
    def brier(cls) -> "RuleSpec":
        return cls(RuleFamily.BRIER)

    @classmethod
    def tsallis(cls, gamma: float, grid: Optional[Grid1D] = None) -> "RuleSpec":
        return cls(RuleFamily.TSALLIS, gamma=float(gamma), grid=grid)

    @classmethod
    def bregman(cls, psi, grid: Optional[Grid1D] = None) -> "RuleSpec":
        psi = convex_function(psi) if isinstance(psi, str) else psi
        return cls(RuleFamily.BREGMAN, psi=psi, grid=grid)

    @classmethod
    def hyvarinen(cls) -> "RuleSpec":
        return cls(RuleFamily.HYVARINEN)

    @classmethod
    def survival(cls, psi, grid: Optional[Grid1D] = None) -> "RuleSpec":
        psi = convex_function(psi) if isinstance(psi, str) else psi
        return cls(RuleFamily.SURVIVAL, psi=psi, grid=grid)

    @classmethod
    def pseudo(cls, base: "RuleSpec") -> "RuleSpec":
        return cls(RuleFamily.PSEUDO, base=base)

    @classmethod
    def composite(cls, components: Sequence[Tuple["RuleSpec", Sequence[int]]]) -> "RuleSpec":
        return cls(RuleFamily.COMPOSITE, components=tuple((r, tuple(s)) for r, s in components))


RULE_NAMES = ("log", "brier", "tsallis", "bregman", "hyvarinen", "survival", "from-loss")


def rule_by_name(
    name: str,
    gamma: Optional[float] = None,
    psi: Optional[str] = None,
    grid: Optional[Grid1D] = None,
) -> RuleSpec:
    """Build a rule from CLI-style parameters."""
    key = str(name or "").strip().lower()
    if key == "log":
        return RuleSpec.log()
    if key == "brier":
        return RuleSpec(RuleFamily.BRIER, grid=grid)
    if key == "tsallis":
        if gamma is None:
            raise SpecificationError("Tsallis rule needs --gamma")
        return RuleSpec.tsallis(gamma, grid=grid)
    if key == "bregman":
        if not psi:
            raise SpecificationError("Bregman rule needs --psi")
        return RuleSpec.bregman(psi, grid=grid)
    if key == "hyvarinen":
        return RuleSpec.hyvarinen()
    if key == "survival":
        if not psi:
            raise SpecificationError("Survival rule needs --psi")
        return RuleSpec.survival(psi, grid=grid)
    raise SpecificationError(f"Unknown rule '{name}'. Known: {', '.join(RULE_NAMES[:-1])}")
