"""Probabilistic prediction-error bounds for single models and fused
predictions over a compact domain.

Single model: with confidence 1 - delta, uniformly over the domain,

    |mean(x) - f(x)| <= eta(x) = sqrt(beta) * sd(x) + gamma * tau

where tau is a grid fineness factor, beta grows with the covering number of
the domain and with -log(delta), and gamma collects Lipschitz constants of
the target, the prior, the kernel and the posterior variance.  The fused
bound is the weight-averaged eta over the elected set (identical weights to
the prediction itself), and the system-wide bound is the Euclidean norm of
the per-agent fused bounds, holding with probability 1 - sum_i |S_i| delta.
"""

import math
from dataclasses import dataclass

import numpy as np

from .exceptions import ConfigError, ContractError
from .expr import lipschitz_estimate

#: readings of the sd(x) factor in eta: "std" (default) uses the posterior
#: standard deviation, "variance" the raw variance
SIGMA_READINGS = ("std", "variance")


@dataclass(frozen=True)
class BoundParams:
    """Grid factor, confidence, domain, and (optional) Lipschitz constants.

    Constants left as None are estimated numerically (max gradient norm on a
    grid, 1.1 safety factor); the kernel constant has a closed form.
    """

    tau: float
    delta: float
    box: object
    lipschitz_f: float | None = None
    lipschitz_prior: float | None = None
    lipschitz_kernel: float | None = None
    sigma_reading: str = "std"

    def __post_init__(self):
        if not self.tau > 0:
            raise ConfigError("tau must be positive")
        if not 0.0 < self.delta < 1.0:
            raise ConfigError("delta must lie in (0, 1)")
        if self.sigma_reading not in SIGMA_READINGS:
            raise ConfigError(f"sigma_reading must be one of {SIGMA_READINGS}")


def beta_constant(params, dim=None):
    """Confidence scale: 2 sum_j log(sqrt(m)/(2 tau) * width_j + 1) - 2 log delta."""
    box = params.box
    m = box.dim if dim is None else dim
    total = sum(math.log(math.sqrt(m) / (2.0 * params.tau) * w + 1.0)
                for w in box.widths)
    return 2.0 * total - 2.0 * math.log(params.delta)


def ard_kernel_lipschitz(kernel_params):
    """Exact Lipschitz constant of the ARD kernel in one argument.

    The gradient norm sigma_r^2 e^{-u} sqrt(sum l_j^4 d_j^2) is maximized by
    putting the whole displacement in the steepest dimension at distance
    1/l_max, giving sigma_r^2 * l_max * e^{-1/2}.
    """
    l_max = float(np.max(kernel_params.inv_lengthscales))
    return kernel_params.signal_var * l_max * math.exp(-0.5)


def variance_lipschitz(model, lipschitz_kernel):
    """Lipschitz constant of the posterior variance:
    2 L_k (1 + N ||K^-1|| max_kappa), spectral norm through the cached factor."""
    if len(model) == 0:
        return 2.0 * lipschitz_kernel
    if not model.is_fitted:
        raise ContractError("variance_lipschitz needs a fitted model")
    singular = np.linalg.svd(model.factor, compute_uv=False)
    inv_norm = 1.0 / float(singular[-1]) ** 2      # ||K^-1|| = 1/min eig(K)
    max_kappa = model.params.signal_var
    return 2.0 * lipschitz_kernel * (1.0 + len(model) * inv_norm * max_kappa)


def gamma_constant(model, params, beta, l_sigma2, lipschitz_f,
                   lipschitz_prior, lipschitz_kernel):
    """Grid-term coefficient:
    L_f + L_prior + sqrt(beta * L_var * tau) + sqrt(N) L_k ||K^-1 residual||."""
    gamma = (lipschitz_f + lipschitz_prior
             + math.sqrt(beta * l_sigma2 * params.tau))
    if len(model) > 0:
        if not model.is_fitted:
            raise ContractError("gamma_constant needs a fitted model")
        gamma += (math.sqrt(len(model)) * lipschitz_kernel
                  * float(np.linalg.norm(model.residual_weights)))
    return gamma


def single_model_bound(model, x, params, beta, gamma):
    """Pointwise bound eta(x) = sqrt(beta) * sd(x) + gamma * tau."""
    variance = model.posterior_variance(x)
    sd = math.sqrt(variance) if params.sigma_reading == "std" else variance
    return math.sqrt(beta) * sd + gamma * params.tau


def single_model_bound_batch(model, Xq, params, beta, gamma):
    """Vectorized eta over query rows (same formula as single_model_bound)."""
    variance = model.posterior_variance_batch(Xq)
    sd = np.sqrt(variance) if params.sigma_reading == "std" else variance
    return np.sqrt(beta) * sd + gamma * params.tau


def aggregated_bound(weights, etas):
    """Fused bound: the weight-averaged per-model bounds over the elected set.

    ``weights`` must be the same WeightVector used for the fused prediction,
    which makes the bound exactly sum_j w_j eta_j.
    """
    missing = [j for j in weights.members() if j not in etas]
    if missing:
        raise ContractError(f"eta missing for elected agents {missing}")
    return float(sum(weights.weight(j) * etas[j] for j in weights.members()))


@dataclass(frozen=True)
class OverallBound:
    """System-wide bound with its nominal confidence level."""

    bound: float
    probability: float
    degenerate: bool     # True when the union bound ate the whole budget


def overall_bound(agent_bounds, elected_sizes, delta):
    """Euclidean norm of the per-agent fused bounds; probability
    1 - sum_i |S_i| delta (reported as-is, flagged when <= 0)."""
    ids = sorted(agent_bounds)
    vec = np.array([agent_bounds[i] for i in ids], dtype=float)
    probability = 1.0 - sum(elected_sizes[i] for i in ids) * delta
    return OverallBound(bound=float(np.linalg.norm(vec)),
                        probability=probability,
                        degenerate=probability <= 0.0)


def resolve_constants(params, target_ast, prior_ast, kernel_params):
    """Fill missing Lipschitz constants (numeric grid estimates for target and
    prior, closed form for the kernel)."""
    l_f = params.lipschitz_f
    if l_f is None:
        l_f = lipschitz_estimate(target_ast, params.box)
    l_prior = params.lipschitz_prior
    if l_prior is None:
        l_prior = lipschitz_estimate(prior_ast, params.box)
    l_kernel = params.lipschitz_kernel
    if l_kernel is None:
        l_kernel = ard_kernel_lipschitz(kernel_params)
    return l_f, l_prior, l_kernel
