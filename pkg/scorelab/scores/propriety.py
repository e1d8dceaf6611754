"""
Brute-force propriety check: S(P, Q) >= S(P, P) over a lattice on the probability simplex.
"""

from dataclasses import dataclass, field
from itertools import combinations
from math import comb
from typing import Optional, Tuple

import numpy as np
from loguru import logger

from scorelab.errors import CapabilityError, SpecificationError
from scorelab.scores.evaluate import discrete_score_table
from scorelab.scores.rules import LossTable, RuleFamily, RuleSpec

BLOCK_CELLS = 4_000_000
# 3 outcomes at step 0.01 gives 5151 points; 4 outcomes at 0.01 would give 176851
MAX_LATTICE_POINTS = 6000


@dataclass(frozen=True)
class ProprietyReport:
    rule: str
    support_size: int
    grid_step: float
    lattice_points: int
    passed: bool
    worst_margin: float
    worst_pair: Tuple[Tuple[float, ...], Tuple[float, ...]]
    min_positive_gap: Optional[float]
    zero_gap_pairs: int
    tolerance: float = field(default=1e-9)

    @property
    def strict_on_grid(self) -> bool:
        return self.passed and self.zero_gap_pairs == 0

    def to_dict(self) -> dict:
        return {
            "rule": self.rule,
            "support_size": self.support_size,
            "grid_step": self.grid_step,
            "lattice_points": self.lattice_points,
            "passed": self.passed,
            "worst_margin": self.worst_margin,
            "worst_pair": {"P": list(self.worst_pair[0]), "Q": list(self.worst_pair[1])},
            "min_positive_gap": self.min_positive_gap,
            "zero_gap_pairs": self.zero_gap_pairs,
            "strict_on_grid": self.strict_on_grid,
        }


def simplex_lattice(k: int, n: int) -> np.ndarray:
    """All probability vectors of length k with entries in {0, 1/n, ..., 1}, as (M, k)."""
    bars = np.array(list(combinations(range(n + k - 1), k - 1)), dtype=int).reshape(-1, k - 1)
    edges = np.hstack([np.full((bars.shape[0], 1), -1), bars, np.full((bars.shape[0], 1), n + k - 1)])
    return (np.diff(edges, axis=1) - 1).astype(float) / n


def _lattice_size(grid_step: float) -> int:
    n = int(round(1.0 / grid_step))
    if abs(n * grid_step - 1.0) > 1e-9:
        raise SpecificationError(f"Grid step {grid_step} does not divide 1")
    return n


def _rule_for_support(rule: RuleSpec, support_size: int) -> RuleSpec:
    if rule.family == RuleFamily.FROM_LOSS and len(rule.loss.states) != support_size:
        raise SpecificationError(
            f"Loss table has {len(rule.loss.states)} states but the check runs on {support_size}"
        )
    return rule


def check_propriety(
    rule: RuleSpec,
    support_size: int,
    grid_step: float = 0.01,
    tolerance: float = 1e-9,
) -> ProprietyReport:
    if not 2 <= int(support_size) <= 4:
        raise SpecificationError(f"Support size must be between 2 and 4, got {support_size}")
    if not 0 < grid_step <= 0.05:
        raise SpecificationError(f"Grid step must be in (0, 0.05], got {grid_step}")
    rule = _rule_for_support(rule, int(support_size))
    n = _lattice_size(grid_step)
    points = comb(n + int(support_size) - 1, int(support_size) - 1)
    if points > MAX_LATTICE_POINTS:
        raise CapabilityError(
            f"{points} lattice points for support {support_size} at step {grid_step} (limit {MAX_LATTICE_POINTS}); "
            "use a coarser --grid-step"
        )
    lattice = simplex_lattice(int(support_size), n)
    m = lattice.shape[0]
    logger.info("Checking propriety of {} on {} lattice points", rule.family.value, m)

    table = discrete_score_table(rule, lattice.T)
    infinite = np.isinf(table).astype(float)
    finite = np.where(np.isinf(table), 0.0, table)
    own = np.einsum("ik,ki->i", lattice, finite)

    worst, worst_at = np.inf, (0, 0)
    min_gap, zero_gaps = np.inf, 0
    block = max(1, BLOCK_CELLS // m)
    for start in range(0, m, block):
        p = lattice[start:start + block]
        cross = p @ finite
        cross[(p > 0).astype(float) @ infinite > 0] = np.inf
        margin = cross - own[start:start + block, None]
        rows = np.arange(p.shape[0])
        margin_off = margin.copy()
        margin_off[rows, rows + start] = np.inf

        j = np.unravel_index(np.argmin(margin), margin.shape)
        if margin[j] < worst:
            worst, worst_at = float(margin[j]), (start + int(j[0]), int(j[1]))
        zero_gaps += int(np.count_nonzero(np.abs(margin_off) <= tolerance))
        positive = margin_off[margin_off > tolerance]
        if positive.size:
            min_gap = min(min_gap, float(positive.min()))

    report = ProprietyReport(
        rule=rule.family.value,
        support_size=int(support_size),
        grid_step=float(grid_step),
        lattice_points=m,
        passed=worst >= -tolerance,
        worst_margin=worst,
        worst_pair=(tuple(lattice[worst_at[0]].tolist()), tuple(lattice[worst_at[1]].tolist())),
        min_positive_gap=None if np.isinf(min_gap) else min_gap,
        zero_gap_pairs=zero_gaps,
        tolerance=tolerance,
    )
    logger.info("Propriety check {}: worst margin {}", "passed" if report.passed else "FAILED", worst)
    return report


def zero_one_rule(support_size: int) -> RuleSpec:
    return RuleSpec(RuleFamily.FROM_LOSS, loss=LossTable.zero_one(tuple(range(support_size))))
