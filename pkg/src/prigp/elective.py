"""Collaborator election and aggregation-weight construction.

An agent elects the most-trusted members of its closed neighborhood (lowest
normalized prior-error scores) and mixes two weight families over the
elected set: trust-based weights (cheap, no variance computation) and
precision-based weights (requires each collaborator's posterior variance).
The mixing exponent ``c`` interpolates: c=1 is trust-only, c=0 is
precision-only, and both endpoints short-circuit so the unused family is
never computed.
"""

import math
from dataclasses import dataclass

from .exceptions import ConfigError, ContractError, InputError, NumericError

#: posterior variances are floored here before precision weighting
VARIANCE_FLOOR = 1e-12

ELECTION_RULES = ("discard", "keep")
VARIANCE_WEIGHT_RULES = ("inverse", "inverse_squared")


@dataclass(frozen=True)
class ElectionResult:
    """Elected subset of a closed neighborhood.

    ``threshold`` is the score value separating elected from discarded
    members (ties broken by ascending (score, agent id) to reach
    ``target_size`` exactly).
    """

    agent_id: int
    elected: tuple
    threshold: float
    target_size: int

    def __contains__(self, agent_id):
        return agent_id in self.elected


def elect(trust, sbar, agent_id, rule="discard"):
    """Elect collaborators from the normalized-trust neighborhood.

    rule="discard" (default): ``sbar`` is the number of members left out, so
    ``target = |neighborhood| - sbar``.  rule="keep": ``sbar`` members are
    kept.  The threshold is the k-th largest score where k is the discarded
    count; members strictly below it are elected, with deterministic
    fill/trim by ascending (score, id) when ties would change the count.
    """
    if rule not in ELECTION_RULES:
        raise ConfigError(f"unknown election rule {rule!r}; choices: {ELECTION_RULES}")
    members = trust.members()
    n = len(members)
    if rule == "discard":
        if not 0 <= sbar <= n - 1:
            raise ConfigError(f"sbar={sbar} out of range [0, {n - 1}] "
                              f"for a neighborhood of {n}")
        target = n - sbar
    else:
        if not 1 <= sbar <= n:
            raise ConfigError(f"sbar={sbar} out of range [1, {n}] "
                              f"for a neighborhood of {n}")
        target = sbar
    discarded = n - target

    order = sorted(members, key=lambda j: (trust[j], j))
    elected = tuple(sorted(order[:target]))
    if discarded >= 1:
        threshold = sorted((trust[j] for j in members), reverse=True)[discarded - 1]
    else:
        threshold = max(trust[j] for j in members)
    return ElectionResult(agent_id=agent_id, elected=elected,
                          threshold=float(threshold), target_size=target)


def h_epsilon(eps_j, threshold, sigma_h):
    """Trust-to-weight transfer: sigma_h*sqrt(2*pi) / exp(-((e-t)/s)^2 / 2).

    Strictly positive, and strictly decreasing in ``eps_j`` below the
    threshold, so better-trusted members get larger raw weights.
    """
    if sigma_h <= 0:
        raise InputError("sigma_h must be positive")
    u = (eps_j - threshold) / sigma_h
    return sigma_h * math.sqrt(2.0 * math.pi) * math.exp(0.5 * u * u)


def h_sigma(variance, rule="inverse"):
    """Precision-style weight from a posterior variance.

    Default is 1/variance; rule="inverse_squared" uses 1/variance**2.
    Callers floor the variance at VARIANCE_FLOOR first.
    """
    if rule not in VARIANCE_WEIGHT_RULES:
        raise ConfigError(f"unknown variance weight rule {rule!r}")
    if variance <= 0:
        raise NumericError("variance weight needs a positive variance")
    return 1.0 / variance if rule == "inverse" else 1.0 / variance**2


def proportional_normalize(raw):
    """Scale nonnegative raw weights to sum to one.

    All-zero input falls back to uniform (only reachable through the
    degenerate all-equal-trust path; h_epsilon itself is strictly positive).
    """
    if not raw:
        raise InputError("cannot normalize an empty weight map")
    for j, w in raw.items():
        if not math.isfinite(w) or w < 0:
            raise InputError(f"raw weight for agent {j} must be finite and >= 0")
    total = sum(raw.values())
    if total == 0.0:
        return {j: 1.0 / len(raw) for j in raw}
    return {j: w / total for j, w in raw.items()}


def prior_weights(election, trust, sigma_h):
    """Normalized trust-based weights over the elected set."""
    raw = {j: h_epsilon(trust[j], election.threshold, sigma_h)
           for j in election.elected}
    return proportional_normalize(raw)


def variance_weights(election, variances, rule="inverse"):
    """Normalized precision-based weights over the elected set."""
    missing = [j for j in election.elected if j not in variances]
    if missing:
        raise ContractError(f"variance missing for elected agents {missing}")
    raw = {j: h_sigma(max(float(variances[j]), VARIANCE_FLOOR), rule=rule)
           for j in election.elected}
    return proportional_normalize(raw)


@dataclass(frozen=True)
class WeightVector:
    """Normalized aggregation weights over an elected set.

    ``weight(j)`` is exactly 0 for non-elected agents.
    """

    weights: dict
    mode: str                 # "prior-only" | "variance-only" | "mixed"
    c: float
    sigma_h: float

    def weight(self, agent_id):
        return self.weights.get(agent_id, 0.0)

    def members(self):
        return sorted(self.weights)

    def as_map(self, neighborhood):
        """Weights materialized over a full neighborhood (zeros off-support)."""
        return {j: self.weights.get(j, 0.0) for j in neighborhood}


def combine_weights(w_eps, w_sigma, c, sigma_h=1.0):
    """Geometric mixture (w_eps^c * w_sigma^(1-c)), renormalized.

    The endpoints short-circuit: c=1 returns the trust-based weights without
    touching (or requiring) the variance-based map, and symmetrically for
    c=0, so a c=1 pipeline never has to compute posterior variances.
    """
    if not 0.0 <= c <= 1.0:
        raise InputError(f"c={c} outside [0, 1]")
    if c == 1.0:
        if w_eps is None:
            raise ContractError("c=1 requires the trust-based weight map")
        return WeightVector(weights=dict(w_eps), mode="prior-only",
                            c=c, sigma_h=sigma_h)
    if c == 0.0:
        if w_sigma is None:
            raise ContractError("c=0 requires the variance-based weight map")
        return WeightVector(weights=dict(w_sigma), mode="variance-only",
                            c=c, sigma_h=sigma_h)
    if w_eps is None or w_sigma is None:
        raise ContractError("mixed weights need both weight maps")
    if set(w_eps) != set(w_sigma):
        raise ContractError("weight maps cover different agents")
    mixed = {j: w_eps[j]**c * w_sigma[j]**(1.0 - c) for j in w_eps}
    return WeightVector(weights=proportional_normalize(mixed), mode="mixed",
                        c=c, sigma_h=sigma_h)


def self_only_weights(agent_id, c, sigma_h):
    """Cold-start fallback: no trust signal exists, the agent keeps itself."""
    return WeightVector(weights={agent_id: 1.0}, mode="prior-only",
                        c=c, sigma_h=sigma_h)
