"""
Model comparison by marginal scores, including Hyvarinen scores under improper priors.
"""

from scorelab.modelsel.bayes import (
    BayesModelSpec,
    ModelComparisonReport,
    compare_models,
    hyvarinen_predictive_score,
    log_bayes_factor,
    marginal_density,
    marginal_score,
    posterior_moments,
    score_difference,
)
from scorelab.modelsel.expfam import ExponentialFamily, expfam_hyvarinen_score, normal_mean_expfam
from scorelab.modelsel.linear import (
    NormalLinearModel,
    aic,
    aic_gap,
    linear_bayes_model,
    nlm_improper_hyvarinen,
    nlm_proper_hyvarinen,
    prequential_hyvarinen,
)
from scorelab.modelsel.priors import CustomPrior, FlatPrior, NormalPrior, PointPrior

__all__ = [
    "BayesModelSpec",
    "CustomPrior",
    "ExponentialFamily",
    "FlatPrior",
    "ModelComparisonReport",
    "NormalLinearModel",
    "NormalPrior",
    "PointPrior",
    "aic",
    "aic_gap",
    "compare_models",
    "expfam_hyvarinen_score",
    "hyvarinen_predictive_score",
    "linear_bayes_model",
    "log_bayes_factor",
    "marginal_density",
    "marginal_score",
    "nlm_improper_hyvarinen",
    "nlm_proper_hyvarinen",
    "normal_mean_expfam",
    "posterior_moments",
    "prequential_hyvarinen",
    "score_difference",
]
