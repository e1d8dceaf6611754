"""
Composite Simpson quadrature on finite grids.

Integrands are vectorized: they receive the full node array and return one value per node.
"""

from dataclasses import dataclass
from typing import Callable, Sequence, Tuple

import numpy as np
from scipy.integrate import simpson

from scorelab.errors import DomainError, SpecificationError


@dataclass(frozen=True)
class Grid1D:
    lower: float
    upper: float
    points: int

    def __post_init__(self) -> None:
        if not (np.isfinite(self.lower) and np.isfinite(self.upper)):
            raise SpecificationError(f"Grid bounds must be finite: [{self.lower}, {self.upper}]")
        if not self.lower < self.upper:
            raise SpecificationError(f"Grid needs lower < upper, got [{self.lower}, {self.upper}]")
        if int(self.points) < 2:
            raise SpecificationError(f"Grid needs at least 2 points, got {self.points}")

    @classmethod
    def around(cls, center: float, scale: float, halfwidth: float = 8.0, points: int = 1601) -> "Grid1D":
        """Grid covering center ± halfwidth·scale."""
        w = float(halfwidth) * float(scale)
        return cls(float(center) - w, float(center) + w, int(points))

    @classmethod
    def for_data(cls, data: Sequence[float], halfwidth: float = 8.0, points: int = 1601) -> "Grid1D":
        """Data range widened by `halfwidth` sample standard deviations."""
        x = np.asarray(data, dtype=float).ravel()
        sd = float(np.std(x, ddof=1)) if x.size > 1 else 0.0
        sd = sd if sd > 0 else 1.0
        return cls(float(x.min()) - halfwidth * sd, float(x.max()) + halfwidth * sd, int(points))

    @property
    def step(self) -> float:
        return (self.upper - self.lower) / (self.points - 1)

    def nodes(self) -> np.ndarray:
        return np.linspace(self.lower, self.upper, int(self.points))

    def doubled(self) -> "Grid1D":
        """Same center and spacing, twice the width."""
        half = 0.5 * (self.upper - self.lower)
        center = 0.5 * (self.upper + self.lower)
        return Grid1D(center - 2.0 * half, center + 2.0 * half, 2 * int(self.points) - 1)


def _values_on(f: Callable[[np.ndarray], np.ndarray], nodes: np.ndarray) -> np.ndarray:
    values = np.asarray(f(nodes), dtype=float)
    if values.shape != nodes.shape[:1]:
        values = np.broadcast_to(values, nodes.shape[:1]).astype(float)
    bad = np.flatnonzero(~np.isfinite(values))
    if bad.size:
        node = nodes[bad[0]]
        raise DomainError(f"Integrand is not finite at node {node!r} (value={values[bad[0]]})")
    return values


def integrate(f: Callable[[np.ndarray], np.ndarray], grid: Grid1D) -> float:
    nodes = grid.nodes()
    values = _values_on(f, nodes)
    return float(simpson(values, x=nodes))


def simpson_weights(grid: Grid1D) -> np.ndarray:
    """Weights w with sum(w·f(nodes)) equal to `integrate(f, grid)`."""
    n = int(grid.points)
    if n % 2 == 1 and n >= 3:
        w = np.full(n, 2.0)
        w[1::2] = 4.0
        w[0] = w[-1] = 1.0
        return w * grid.step / 3.0
    return np.asarray(simpson(np.eye(n), x=grid.nodes(), axis=1), dtype=float)


def tensor_nodes(grids: Sequence[Grid1D]) -> Tuple[np.ndarray, np.ndarray]:
    """Tensor-product nodes (m, d) and Simpson weights (m,) over a box."""
    if not grids:
        raise SpecificationError("tensor_nodes needs at least one grid")
    axes = [g.nodes() for g in grids]
    weights = [simpson_weights(g) for g in grids]
    mesh = np.meshgrid(*axes, indexing="ij")
    nodes = np.stack([m.ravel() for m in mesh], axis=1)
    w = weights[0]
    for extra in weights[1:]:
        w = np.multiply.outer(w, extra)
    return nodes, np.asarray(w, dtype=float).ravel()
