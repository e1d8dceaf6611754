"""
Minimum-score estimation, sandwich asymptotics and robustness diagnostics.
"""

from scorelab.estimation.estimator import EstimationResult, data_start, minimum_score_estimate, model_information
from scorelab.estimation.families import (
    ParametricFamily,
    bernoulli_family,
    degenerate_family,
    family_by_name,
    location_density,
    location_family,
    normal_family,
)
from scorelab.estimation.gradients import register_closed_form, score_gradient, score_gradients
from scorelab.estimation.robustness import (
    RobustnessReport,
    brobustness_check,
    check_unbiased_estimating_equation,
    influence_function,
    sandwich_from_if,
)

__all__ = [
    "EstimationResult",
    "ParametricFamily",
    "RobustnessReport",
    "bernoulli_family",
    "brobustness_check",
    "check_unbiased_estimating_equation",
    "data_start",
    "degenerate_family",
    "family_by_name",
    "influence_function",
    "location_density",
    "location_family",
    "minimum_score_estimate",
    "model_information",
    "normal_family",
    "register_closed_form",
    "sandwich_from_if",
    "score_gradient",
    "score_gradients",
]
