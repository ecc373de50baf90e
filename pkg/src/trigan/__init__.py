"""Triangular-map generative learning on the unit cube.

Exact transport sampling for grid densities, a certified monotone
generator family with epsilon-nets, divergences and adversarial losses,
minimax fitting, sampling-error experiments, and closed-form constants
for the accompanying error bounds.
"""

from .bounds import (
    BoundReport,
    RhoMetricParams,
    bound_report,
    covering_bound,
    dudley_bound,
    full_C,
    gamma_constant,
    k_schedule,
    mcdiarmid_tail,
    rho_metric,
    thm54_threshold_and_prob,
)
from .density import GridDensity, load_density, make_density, save_density
from .divergence import (
    DiscriminatorFn,
    js_divergence,
    kl_divergence,
    optimal_discriminator,
    theoretical_loss,
)
from .errors import (
    BoxOutOfDomain,
    ConfigInvalid,
    DegenerateJacobian,
    DiscriminatorOutOfRange,
    InsufficientResolution,
    IntegralDivergent,
    NetTooLarge,
    NonConvergence,
    NonPositiveDensity,
    ParamsOutOfBox,
    RootNotBracketed,
    TriganError,
    ZeroMarginal,
)
from .holder import HolderEstimate, estimate_holder_norm
from .hypothesis import (
    EpsNet,
    GeneratorParams,
    HypothesisConfig,
    build_eps_net,
    load_config,
    make_config,
    make_discriminator,
    make_generator,
    neutral_params,
    save_config,
    save_net,
)
from .learning import (
    MinimaxResult,
    RateReport,
    SamplingErrorSummary,
    TrainingSample,
    empirical_loss,
    estimate_sampling_error,
    make_training_sample,
    minimax_fit,
    rate_experiment,
)
from .rosenblatt import PushforwardDensity, TriangularMap, build_rosenblatt, sample

__all__ = [
    "BoundReport",
    "BoxOutOfDomain",
    "ConfigInvalid",
    "DegenerateJacobian",
    "DiscriminatorFn",
    "DiscriminatorOutOfRange",
    "EpsNet",
    "GeneratorParams",
    "GridDensity",
    "HolderEstimate",
    "HypothesisConfig",
    "InsufficientResolution",
    "IntegralDivergent",
    "MinimaxResult",
    "NetTooLarge",
    "NonConvergence",
    "NonPositiveDensity",
    "ParamsOutOfBox",
    "PushforwardDensity",
    "RateReport",
    "RhoMetricParams",
    "RootNotBracketed",
    "SamplingErrorSummary",
    "TrainingSample",
    "TriangularMap",
    "TriganError",
    "ZeroMarginal",
    "bound_report",
    "build_eps_net",
    "build_rosenblatt",
    "covering_bound",
    "dudley_bound",
    "empirical_loss",
    "estimate_holder_norm",
    "estimate_sampling_error",
    "full_C",
    "gamma_constant",
    "js_divergence",
    "k_schedule",
    "kl_divergence",
    "load_config",
    "load_density",
    "make_config",
    "make_density",
    "make_discriminator",
    "make_generator",
    "make_training_sample",
    "mcdiarmid_tail",
    "minimax_fit",
    "neutral_params",
    "optimal_discriminator",
    "rate_experiment",
    "rho_metric",
    "sample",
    "save_config",
    "save_density",
    "save_net",
    "theoretical_loss",
    "thm54_threshold_and_prob",
]

__version__ = "0.1.0"
