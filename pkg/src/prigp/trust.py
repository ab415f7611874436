"""Prior-error bookkeeping: the trust signal behind collaborator election.

Each agent keeps a running record of how far its prior mean was from actual
measurements.  The running mean of absolute errors is the agent's
trustworthiness score; aggregating agents min-max normalize the scores over
their own closed neighborhood before electing collaborators.
"""

import math
from dataclasses import dataclass

import numpy as np

from . import backend
from .exceptions import ContractError, InputError
from .gp import prior_vector


class PriorErrorLog:
    """Per-agent record of signed prior errors e = prior(x) - y.

    Only the count and the absolute-error sum are needed for the running
    mean; the full (t, x, e) history is retained only when audit output is
    requested (O(1) memory otherwise).
    """

    def __init__(self, agent_id, keep_history=False):
        self.agent_id = agent_id
        self.count = 0
        self.sum_abs = 0.0
        self.history = [] if keep_history else None

    def record(self, prior_value, measurement, t=None, x=None):
        """Append one error; returns the signed error."""
        if not (math.isfinite(prior_value) and math.isfinite(measurement)):
            raise InputError("prior value and measurement must be finite")
        e = float(prior_value) - float(measurement)
        self.count += 1
        self.sum_abs += abs(e)
        if self.history is not None:
            self.history.append((t, x, e))
        return e

    def accumulated(self):
        """Running mean of |e| over all recorded errors; None before the first."""
        if self.count == 0:
            return None
        return self.sum_abs / self.count


@dataclass(frozen=True)
class NormalizedTrust:
    """Min-max normalized error scores over one closed neighborhood."""

    values: dict
    eps_min: float
    eps_max: float

    def __getitem__(self, agent_id):
        return self.values[agent_id]

    def members(self):
        return sorted(self.values)


def normalize_neighborhood(values):
    """Min-max normalize raw scores {agent: eps} into [0, 1].

    When all scores coincide every normalized value is 0 (no trust signal;
    downstream election falls back to deterministic tie-breaking).
    """
    if not values:
        raise InputError("normalization needs at least one agent")
    raw = {j: float(v) for j, v in values.items()}
    if not all(math.isfinite(v) for v in raw.values()):
        raise InputError("scores must be finite")
    lo = min(raw.values())
    hi = max(raw.values())
    if hi == lo:
        normalized = {j: 0.0 for j in raw}
    else:
        normalized = {j: (v - lo) / (hi - lo) for j, v in raw.items()}
    return NormalizedTrust(values=normalized, eps_min=lo, eps_max=hi)


@dataclass(frozen=True)
class ResidualIdentityReport:
    """Two independent routes to the mean absolute prior error on the
    training set, plus their elementwise gap (testing oracle).

    ``mean_abs_direct`` averages |Y - prior(X)|; ``mean_abs_transformed``
    averages |G (Y - mean(X))| with G = I + K(X,X) / noise_var, which must
    agree because Y - prior(X) = G (Y - mean(X)) for an exact GP posterior.
    """

    max_abs_deviation: float
    mean_abs_direct: float
    mean_abs_transformed: float


def prior_error_identity(model):
    """Compare the direct and posterior-transformed prior-residual routes.

    Uses the same jitter the model was fitted with (folded into the noise
    term of G) so the identity holds to round-off.
    """
    if len(model) < 1 or not model.is_fitted:
        raise ContractError("identity check needs a fitted model with data")
    X = np.ascontiguousarray(model.data.X)
    Y = model.data.Y
    n = len(model)

    direct = Y - prior_vector(model.prior, X)

    mean_at_train = model.posterior_mean_batch(X)
    K_xx = backend.get().ard_gram(X, model.params.signal_var,
                                  model.params.inv_lengthscales, 0.0)
    G = np.eye(n) + K_xx / (model.params.noise_var + model.jitter)
    transformed = G @ (Y - mean_at_train)

    return ResidualIdentityReport(
        max_abs_deviation=float(np.max(np.abs(direct - transformed))),
        mean_abs_direct=float(np.mean(np.abs(direct))),
        mean_abs_transformed=float(np.mean(np.abs(transformed))),
    )
