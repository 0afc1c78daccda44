"""Bayesian peaks-over-threshold inference for heavy and light tails.

Fit generalized Pareto excess models over a high threshold, sample the
posterior of (shape, scale) under several objective priors, and turn the
draws into extreme quantile estimates, predictive tail probabilities,
covariate-dependent tail effects, and simulation experiments.
"""
from .conditional import (
    ConditionalDraws,
    conditional_draws,
    conditional_predictive_cdf,
    conditional_quantile_draws,
)
from .excess import ExcessData, extract_excesses
from .gpd import (
    FisherMatrix,
    FitError,
    FitResult,
    GpdParams,
    fisher_info,
    fit_mle,
    gpd_cdf,
    gpd_logpdf,
    gpd_quantile,
    loglik_grad,
    loglik_sum,
)
from .mcmc import (
    ChainInitError,
    McmcConfig,
    McmcDiagnostics,
    PosteriorDraws,
    diagnostics,
    effective_sample_size,
    pot_log_posterior,
    run_chain,
    sample_pot_posterior,
)
from .posterior import (
    CredibleInterval,
    PredictiveDistribution,
    Summary,
    credible_interval,
    extreme_quantile_draws,
    predictive_cdf,
    predictive_quantile,
    summarize,
    wasserstein,
)
from .priors import (
    ClauseResult,
    PriorSpec,
    ValidationReport,
    log_prior,
    validate_prior,
)
from .scedasis import (
    DiscreteMeasure,
    DpPosterior,
    KsTestReport,
    ProductBetaBase,
    ScedasisPosterior,
    UniformBase,
    dp_posterior,
    knn_radius,
    ks_covariate_test,
    sample_dp_functional,
    scedasis_posterior,
)
from .simlab import (
    ConditionalModel,
    ExperimentReport,
    MarginalModel,
    coverage_experiment,
    power_experiment,
    predictive_consistency_experiment,
    rmirse,
    rmirse_experiment,
)

__version__ = "0.1.0"

__all__ = [
    "ChainInitError",
    "ClauseResult",
    "ConditionalDraws",
    "ConditionalModel",
    "CredibleInterval",
    "DiscreteMeasure",
    "DpPosterior",
    "ExcessData",
    "ExperimentReport",
    "FisherMatrix",
    "FitError",
    "FitResult",
    "GpdParams",
    "KsTestReport",
    "MarginalModel",
    "McmcConfig",
    "McmcDiagnostics",
    "PosteriorDraws",
    "PredictiveDistribution",
    "PriorSpec",
    "ProductBetaBase",
    "ScedasisPosterior",
    "Summary",
    "UniformBase",
    "ValidationReport",
    "conditional_draws",
    "conditional_predictive_cdf",
    "conditional_quantile_draws",
    "coverage_experiment",
    "credible_interval",
    "diagnostics",
    "dp_posterior",
    "effective_sample_size",
    "extract_excesses",
    "extreme_quantile_draws",
    "fisher_info",
    "fit_mle",
    "gpd_cdf",
    "gpd_logpdf",
    "gpd_quantile",
    "knn_radius",
    "ks_covariate_test",
    "log_prior",
    "loglik_grad",
    "loglik_sum",
    "pot_log_posterior",
    "power_experiment",
    "predictive_cdf",
    "predictive_consistency_experiment",
    "predictive_quantile",
    "rmirse",
    "rmirse_experiment",
    "run_chain",
    "sample_pot_posterior",
    "sample_dp_functional",
    "scedasis_posterior",
    "summarize",
    "validate_prior",
    "wasserstein",
    "__version__",
]
