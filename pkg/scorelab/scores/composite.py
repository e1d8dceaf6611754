"""
Composite and pseudo scores: sums of component scores over variable subsets or over the full
conditionals of a lattice model.
"""

from dataclasses import dataclass
from typing import Hashable, Iterable, Protocol, Sequence, Tuple

import numpy as np
from scipy.special import expit

from scorelab.errors import ComponentError, DomainError, SpecificationError
from scorelab.scores.distributions import DensityModel, DiscreteDistribution
from scorelab.scores.rules import RuleSpec


def _project(x, subset: Tuple[int, ...], dist):
    values = [x[i] for i in subset]
    if isinstance(dist, DensityModel):
        return np.asarray(values, dtype=float)
    return values[0] if len(values) == 1 else tuple(values)


def composite_score(x, components: Sequence[Tuple[RuleSpec, Sequence[int], object]]) -> float:
    """Sum over k of S_k(x restricted to subset k, Q_k)."""
    from scorelab.scores.evaluate import evaluate_score

    if not components:
        raise SpecificationError("Composite score needs at least one component")
    total = 0.0
    for k, (rule, subset, dist) in enumerate(components):
        try:
            total += evaluate_score(rule, _project(x, tuple(subset), dist), dist)
        except (IndexError, KeyError) as e:
            raise ComponentError(k, DomainError(f"subset {tuple(subset)} does not index the observation: {e}"))
        except Exception as e:
            raise ComponentError(k, e)
    return float(total)


class ConditionalFamily(Protocol):
    """Full conditionals Q_v(. | x_rest) of a joint model over sites."""

    def sites(self, x) -> Iterable[Hashable]: ...

    def value(self, x, site: Hashable): ...

    def conditional(self, x, site: Hashable): ...


def pseudo_score(x, model: ConditionalFamily, base_rule: RuleSpec) -> float:
    """Sum over sites of the base rule applied to each full conditional."""
    from scorelab.scores.evaluate import evaluate_score

    total = 0.0
    for site in model.sites(x):
        total += evaluate_score(base_rule, model.value(x, site), model.conditional(x, site))
        if np.isinf(total):
            return float(np.inf)
    return float(total)


def ratio_matching_score(x, model: ConditionalFamily) -> float:
    return pseudo_score(x, model, RuleSpec.brier())


@dataclass(frozen=True)
class IsingLattice:
    """
    Binary lattice with states {0, 1} and spins s = 2x - 1 on a 4-neighbour grid.

    P(x_v = 1 | rest) = expit(2 (field + coupling · sum of neighbouring spins)).
    """

    rows: int
    cols: int
    field: float = 0.0
    coupling: float = 0.0

    def __post_init__(self) -> None:
        if int(self.rows) < 1 or int(self.cols) < 1:
            raise SpecificationError(f"Lattice needs positive dimensions, got {self.rows}x{self.cols}")

    def _grid(self, x) -> np.ndarray:
        arr = np.asarray(x)
        if arr.shape != (self.rows, self.cols):
            arr = arr.reshape(self.rows, self.cols)
        if not np.all(np.isin(arr, (0, 1))):
            raise DomainError("Lattice configuration entries must be 0 or 1")
        return arr.astype(int)

    def sites(self, x) -> Iterable[Tuple[int, int]]:
        self._grid(x)
        return [(i, j) for i in range(self.rows) for j in range(self.cols)]

    def value(self, x, site: Tuple[int, int]) -> int:
        return int(self._grid(x)[site])

    def conditional(self, x, site: Tuple[int, int]) -> DiscreteDistribution:
        spins = 2 * self._grid(x) - 1
        i, j = site
        neighbours = 0
        for di, dj in ((-1, 0), (1, 0), (0, -1), (0, 1)):
            a, b = i + di, j + dj
            if 0 <= a < self.rows and 0 <= b < self.cols:
                neighbours += spins[a, b]
        return DiscreteDistribution.binary(float(expit(2.0 * (self.field + self.coupling * neighbours))))
