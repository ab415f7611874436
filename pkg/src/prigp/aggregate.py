"""Fused predictions: the elective trust-weighted aggregator plus the six
standard baselines (POE, GPOE, BCM, RBCM, MOE, IGP).

Every aggregator returns an AggregateResult carrying the fused value and
accounting of how many posterior mean/variance evaluations it triggered and
how many remote agents it contacted.  The elective method queries only the
elected subset; the baselines always aggregate over the full closed
neighborhood, which is exactly the cost they are criticized for.

Baseline formulas (the literature-standard forms, fixed here as this
package's contract):

  MOE    uniform average of posterior means.
  POE    precision-weighted mean, weights 1/var_j(x).
  GPOE   generalized POE with uniform expert exponents; same mean as POE.
  BCM    precision sum corrected by (M-1) prior precisions, prior mean taken
         from the aggregating agent.
  RBCM   differential-entropy exponents beta_j = 0.5*(log prior_var - log var_j).
  IGP    the agent's own posterior mean, no cooperation.
"""

from dataclasses import dataclass, field

import math

from .elective import (VARIANCE_FLOOR, WeightVector, combine_weights, elect,
                       prior_weights, self_only_weights, variance_weights)
from .exceptions import ConfigError, NumericError

METHOD_NAMES = ("prigp", "poe", "gpoe", "bcm", "rbcm", "moe", "igp")


@dataclass(frozen=True)
class Method:
    """Aggregation method tag; ``c`` is only meaningful for prigp."""

    name: str
    c: float = 1.0

    def __post_init__(self):
        if self.name not in METHOD_NAMES:
            raise ConfigError(f"unknown method {self.name!r}; choices: {METHOD_NAMES}")
        if not 0.0 <= self.c <= 1.0:
            raise ConfigError(f"c={self.c} outside [0, 1]")

    @property
    def label(self):
        if self.name == "prigp":
            c = self.c
            return f"prigp(c={int(c) if c in (0.0, 1.0) else c})"
        return self.name

    @property
    def needs_variance(self):
        if self.name == "prigp":
            return self.c != 1.0
        return self.name in ("poe", "gpoe", "bcm", "rbcm")


@dataclass
class AggregateResult:
    """Fused prediction plus per-call accounting."""

    value: float
    weights: WeightVector | None = None
    election: object | None = None
    mean_evals: int = 0
    var_evals: int = 0
    messages: int = 0
    queried: tuple = field(default=())


def prigp_predict(agent_id, x, models, trust, sbar, c=1.0, sigma_h=1.0,
                  election_rule="discard", variance_weight_rule="inverse"):
    """Elective trust-weighted fusion at query point ``x``.

    ``models`` maps the closed neighborhood to fitted models; only elected
    members are queried for their mean (and variance only when c != 1).
    ``trust=None`` signals a cold start (no error history anywhere): the
    agent falls back to its own model alone.
    """
    if trust is None:
        weights = self_only_weights(agent_id, c, sigma_h)
        election = None
    else:
        election = elect(trust, sbar, agent_id, rule=election_rule)
        w_eps = prior_weights(election, trust, sigma_h) if c > 0.0 else None
        w_sig = None
        if c != 1.0:
            variances = {j: models[j].posterior_variance(x)
                         for j in election.elected}
            w_sig = variance_weights(election, variances,
                                     rule=variance_weight_rule)
        weights = combine_weights(w_eps, w_sig, c, sigma_h=sigma_h)

    members = weights.members()
    value = sum(weights.weight(j) * models[j].posterior_mean(x) for j in members)
    return AggregateResult(
        value=float(value), weights=weights, election=election,
        mean_evals=len(members),
        var_evals=0 if c == 1.0 or trust is None else len(members),
        messages=sum(1 for j in members if j != agent_id),
        queried=tuple(members))


def moe_predict(agent_id, x, models):
    """Uniform mixture over the closed neighborhood."""
    members = sorted(models)
    value = sum(models[j].posterior_mean(x) for j in members) / len(members)
    return AggregateResult(value=float(value), mean_evals=len(members),
                           messages=len(members) - (agent_id in models),
                           queried=tuple(members))


def _precision_weights(x, models, members):
    variances = {}
    for j in members:
        v = models[j].posterior_variance(x)
        if v <= VARIANCE_FLOOR:
            raise NumericError(f"agent {j} variance {v:.3e} at or below floor "
                               f"{VARIANCE_FLOOR:g}")
        variances[j] = v
    return variances


def poe_predict(agent_id, x, models):
    """Precision-weighted mean: weights proportional to 1/var_j(x)."""
    members = sorted(models)
    variances = _precision_weights(x, models, members)
    weights = {j: 1.0 / variances[j] for j in members}
    total = sum(weights.values())
    value = sum(weights[j] * models[j].posterior_mean(x) for j in members) / total
    return AggregateResult(value=float(value), mean_evals=len(members),
                           var_evals=len(members),
                           messages=len(members) - (agent_id in models),
                           queried=tuple(members))


def gpoe_predict(agent_id, x, models):
    """Generalized POE with uniform expert exponents; mean coincides with POE."""
    result = poe_predict(agent_id, x, models)
    return result


def bcm_predict(agent_id, x, models):
    """Bayesian committee machine with the aggregator's own prior as the
    common prior correction."""
    members = sorted(models)
    own = models[agent_id]
    prior_var = own.params.signal_var + own.params.noise_var
    prior_mean = float(own.prior(x))
    variances = _precision_weights(x, models, members)
    m = len(members)
    s = sum(1.0 / variances[j] for j in members) - (m - 1) / prior_var
    if s <= VARIANCE_FLOOR:
        raise NumericError(
            f"BCM precision {s:.3e} nonpositive (M={m}, prior_var={prior_var:.3e}, "
            f"variances={[variances[j] for j in members]})")
    value = (sum(models[j].posterior_mean(x) / variances[j] for j in members)
             - (m - 1) * prior_mean / prior_var) / s
    return AggregateResult(value=float(value), mean_evals=m, var_evals=m,
                           messages=m - (agent_id in models),
                           queried=tuple(members))


def rbcm_predict(agent_id, x, models):
    """Robust BCM: expert exponents from the prior-to-posterior entropy drop."""
    members = sorted(models)
    own = models[agent_id]
    prior_var = own.params.signal_var + own.params.noise_var
    prior_mean = float(own.prior(x))
    variances = _precision_weights(x, models, members)
    betas = {j: 0.5 * (math.log(prior_var) - math.log(variances[j]))
             for j in members}
    beta_sum = sum(betas.values())
    precision = (sum(betas[j] / variances[j] for j in members)
                 + (1.0 - beta_sum) / prior_var)
    if precision <= VARIANCE_FLOOR:
        raise NumericError(f"RBCM precision {precision:.3e} nonpositive "
                           f"(beta_sum={beta_sum:.3e})")
    value = (sum(betas[j] * models[j].posterior_mean(x) / variances[j]
                 for j in members)
             + (1.0 - beta_sum) * prior_mean / prior_var) / precision
    return AggregateResult(value=float(value), mean_evals=len(members),
                           var_evals=len(members),
                           messages=len(members) - (agent_id in models),
                           queried=tuple(members))


def igp_predict(agent_id, x, models):
    """Individual prediction: the agent's own posterior mean, no messages."""
    value = models[agent_id].posterior_mean(x)
    return AggregateResult(value=float(value), mean_evals=1, var_evals=0,
                           messages=0, queried=(agent_id,))


def predict(method, agent_id, x, models, trust=None, sbar=None, sigma_h=1.0,
            election_rule="discard", variance_weight_rule="inverse"):
    """Dispatch one aggregation step for ``method``."""
    if method.name == "prigp":
        if sbar is None and trust is not None:
            raise ConfigError("prigp prediction needs the per-agent sbar")
        return prigp_predict(agent_id, x, models, trust, sbar, c=method.c,
                             sigma_h=sigma_h, election_rule=election_rule,
                             variance_weight_rule=variance_weight_rule)
    if method.name == "moe":
        return moe_predict(agent_id, x, models)
    if method.name == "poe":
        return poe_predict(agent_id, x, models)
    if method.name == "gpoe":
        return gpoe_predict(agent_id, x, models)
    if method.name == "bcm":
        return bcm_predict(agent_id, x, models)
    if method.name == "rbcm":
        return rbcm_predict(agent_id, x, models)
    return igp_predict(agent_id, x, models)
