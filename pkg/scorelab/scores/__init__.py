"""
Scoring rules, their evaluation, and the entropy / divergence / dependence functionals.
"""

from scorelab.scores.composite import IsingLattice, composite_score, pseudo_score, ratio_matching_score
from scorelab.scores.distributions import (
    DensityModel,
    DiscreteDistribution,
    load_discrete_csv,
    normal_density,
    normal_mixture_density,
)
from scorelab.scores.evaluate import (
    dependence,
    divergence,
    entropy,
    evaluate_score,
    expected_score,
    rule_from_loss,
    score_vector,
)
from scorelab.scores.propriety import ProprietyReport, check_propriety
from scorelab.scores.rules import ConvexFunction, LossTable, RuleFamily, RuleSpec, convex_function, rule_by_name
from scorelab.scores.survival import HazardModel, SurvivalObservation, exponential_hazard, survival_score

__all__ = [
    "ConvexFunction",
    "DensityModel",
    "DiscreteDistribution",
    "HazardModel",
    "IsingLattice",
    "LossTable",
    "ProprietyReport",
    "RuleFamily",
    "RuleSpec",
    "SurvivalObservation",
    "check_propriety",
    "composite_score",
    "convex_function",
    "dependence",
    "divergence",
    "entropy",
    "evaluate_score",
    "expected_score",
    "exponential_hazard",
    "load_discrete_csv",
    "normal_density",
    "normal_mixture_density",
    "pseudo_score",
    "ratio_matching_score",
    "rule_by_name",
    "rule_from_loss",
    "score_vector",
    "survival_score",
]
