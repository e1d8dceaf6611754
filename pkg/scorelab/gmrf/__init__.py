"""
Tridiagonal Gaussian Markov chain: exact likelihood, Hyvarinen and pseudo-likelihood estimation,
and the Wishart extension for repeated vectors.
"""

from scorelab.gmrf.hyvarinen import (
    ChainConditionals,
    ChainEstimate,
    chain_density,
    chain_family,
    exact_neg_loglik,
    hyvarinen_closed_form,
    hyvarinen_numeric_estimate,
    hyvarinen_objective,
    maximum_likelihood_estimate,
    pseudo_likelihood_estimate,
    pseudo_loglik,
)
from scorelab.gmrf.model import (
    ChainData,
    ChainStatistics,
    TridiagonalModel,
    chain_statistics,
    simulate_chain,
    tridiag_logdet,
)
from scorelab.gmrf.wishart import WishartData, WishartEstimate, wishart_hyvarinen_estimate, wishart_objective

__all__ = [
    "ChainConditionals",
    "ChainData",
    "ChainEstimate",
    "ChainStatistics",
    "TridiagonalModel",
    "WishartData",
    "WishartEstimate",
    "chain_density",
    "chain_family",
    "chain_statistics",
    "exact_neg_loglik",
    "hyvarinen_closed_form",
    "hyvarinen_numeric_estimate",
    "hyvarinen_objective",
    "maximum_likelihood_estimate",
    "pseudo_likelihood_estimate",
    "pseudo_loglik",
    "simulate_chain",
    "tridiag_logdet",
    "wishart_hyvarinen_estimate",
    "wishart_objective",
]
