"""prigp: prior-aware elective distributed Gaussian process regression.

Agents in a communication graph each hold a GP with an individual prior
mean.  They score each other by accumulated prior-vs-measurement error,
elect the most trustworthy neighbors, and fuse the elected posterior means
with trust- and/or precision-based weights.  The package also ships the
standard aggregation baselines (POE, GPOE, BCM, RBCM, MOE, IGP),
probabilistic prediction-error bounds, a multi-agent simulator, and a CLI
reproducing the two reference benchmarks.

The hot kernel primitives run on a compiled extension when available; see
``prigp.backend`` (``PRIGP_BACKEND=py`` forces the NumPy fallback).
"""

from . import backend
from .aggregate import (AggregateResult, Method, bcm_predict, gpoe_predict,
                        igp_predict, moe_predict, poe_predict, predict,
                        prigp_predict, rbcm_predict)
from .bounds import (BoundParams, OverallBound, aggregated_bound,
                     ard_kernel_lipschitz, beta_constant, gamma_constant,
                     overall_bound, single_model_bound, variance_lipschitz)
from .config import ExperimentConfig, build, load_config
from .domain import Box
from .elective import (ElectionResult, WeightVector, combine_weights, elect,
                       h_epsilon, h_sigma, prior_weights,
                       proportional_normalize, variance_weights)
from .exceptions import (ConfigError, ContractError, InputError, NumericError,
                         PrigpError)
from .expr import (CATALOG, ExprSyntaxError, PriorMeanFunction, evaluate,
                   evaluate_many, lipschitz_estimate, parse, resolve_prior,
                   to_source)
from .gp import Dataset, GpModel, KernelParams, Prediction, gram_matrix, kernel_eval
from .graph import CommGraph, build_graph
from .sim import (AgentSpec, DynamicsSpec, EpisodeConfig, EpisodeResult,
                  MonteCarloSummary, StepTrace, chaos_dynamics, chaos_rhs,
                  euler_step, monte_carlo, run_episode)
from .trust import (NormalizedTrust, PriorErrorLog, ResidualIdentityReport,
                    normalize_neighborhood, prior_error_identity)

__version__ = "0.1.0"

__all__ = [
    "AggregateResult", "AgentSpec", "BoundParams", "Box", "CATALOG",
    "CommGraph", "ConfigError", "ContractError", "Dataset", "DynamicsSpec",
    "ElectionResult", "EpisodeConfig", "EpisodeResult", "ExperimentConfig",
    "ExprSyntaxError", "GpModel", "InputError", "KernelParams", "Method",
    "MonteCarloSummary", "NormalizedTrust", "NumericError", "OverallBound",
    "Prediction", "PriorErrorLog", "PriorMeanFunction", "PrigpError",
    "ResidualIdentityReport", "StepTrace", "WeightVector",
    "aggregated_bound", "ard_kernel_lipschitz", "backend", "bcm_predict",
    "beta_constant", "build", "build_graph", "chaos_dynamics", "chaos_rhs",
    "combine_weights", "elect", "euler_step", "evaluate", "evaluate_many",
    "gamma_constant", "gpoe_predict", "gram_matrix", "h_epsilon", "h_sigma",
    "igp_predict", "kernel_eval", "lipschitz_estimate", "load_config",
    "moe_predict", "monte_carlo", "normalize_neighborhood", "overall_bound",
    "parse", "poe_predict", "predict", "prigp_predict", "prior_error_identity",
    "prior_weights", "proportional_normalize", "rbcm_predict", "resolve_prior",
    "run_episode", "single_model_bound", "to_source", "variance_lipschitz",
    "variance_weights",
]
