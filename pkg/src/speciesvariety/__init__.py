"""Bayesian nonparametric inference for the number of new species in an
additional sample, under normalized generalized gamma (NGG) and two-parameter
Poisson-Dirichlet (PD) priors: exact PMF / point estimate / HPD interval at
moderate sizes, and limit-law approximations with exact samplers for large
additional samples."""

__version__ = "0.1.0"

from ._backend import COMPILED as compiled_kernels_active
from .asymptotics import (
    AsymptoticEstimate,
    approximate_posterior,
    limit_density,
    posterior_stable_laplace,
)
from .models import (
    ConsistencyError,
    Family,
    ModelParams,
    PredictiveWeights,
    SampleSummary,
    diversity_sample,
    gibbs_vnk,
    ngg,
    pd,
    predictive_weights,
)
from .numerics import (
    BigReal,
    DEFAULT_PRECISION,
    GfcTable,
    bigreal,
    gfc,
    rising_factorial,
    signed_alternating_sum,
    stable_density,
    upper_incomplete_gamma,
)
from .posterior import (
    EXACT_M_LIMIT,
    ExactComputationLimit,
    HpdInterval,
    PosteriorPMF,
    dp_oracle_pmf,
    exact_pmf,
    hpd_interval,
    posterior_mean,
)
from .samplers import (
    LimitLaw,
    RandomState,
    sample_exp_tilted_stable,
    sample_limit_ngg,
    sample_limit_pd,
    sample_mittag_leffler,
    sample_positive_stable,
    simulate_additional_sample,
)

__all__ = [
    "AsymptoticEstimate",
    "BigReal",
    "ConsistencyError",
    "DEFAULT_PRECISION",
    "EXACT_M_LIMIT",
    "ExactComputationLimit",
    "Family",
    "GfcTable",
    "HpdInterval",
    "LimitLaw",
    "ModelParams",
    "PosteriorPMF",
    "PredictiveWeights",
    "RandomState",
    "SampleSummary",
    "approximate_posterior",
    "bigreal",
    "compiled_kernels_active",
    "diversity_sample",
    "dp_oracle_pmf",
    "exact_pmf",
    "gfc",
    "gibbs_vnk",
    "hpd_interval",
    "limit_density",
    "ngg",
    "pd",
    "posterior_mean",
    "posterior_stable_laplace",
    "predictive_weights",
    "rising_factorial",
    "sample_exp_tilted_stable",
    "sample_limit_ngg",
    "sample_limit_pd",
    "sample_mittag_leffler",
    "sample_positive_stable",
    "signed_alternating_sum",
    "simulate_additional_sample",
    "stable_density",
    "upper_incomplete_gamma",
]
