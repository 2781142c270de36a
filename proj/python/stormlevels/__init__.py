"""Spatial extremes return levels with dependence-weighted likelihoods."""

from ._core import (
    __version__,
    analytic_theta,
    compute_weights,
    ecdf_transform,
    effective_info,
    ess,
    fit,
    gev_cdf,
    gev_logpdf,
    gev_quantile,
    hpd_interval,
    pairwise_theta,
    pc_distance,
    pc_logprior,
    simulate_dataset,
    theta_curve,
    to_frechet,
)

__all__ = [
    "__version__",
    "analytic_theta",
    "compute_weights",
    "ecdf_transform",
    "effective_info",
    "ess",
    "fit",
    "gev_cdf",
    "gev_logpdf",
    "gev_quantile",
    "hpd_interval",
    "pairwise_theta",
    "pc_distance",
    "pc_logprior",
    "simulate_dataset",
    "theta_curve",
    "to_frechet",
]
