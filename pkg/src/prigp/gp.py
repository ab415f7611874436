"""Gaussian process regression with a non-zero, per-agent prior mean.

The posterior corrects the prior with observed residuals:

    mean(x) = prior(x) + kappa(x, X) K^-1 (Y - prior(X))
    var(x)  = kappa(x, x) - kappa(x, X) K^-1 kappa(x, X)^T

with K = kappa(X, X) + noise_std^2 I, factorized once (Cholesky) and reused.

Kernel convention
-----------------
``inv_lengthscales`` multiplies the squared distance:

    kappa(x, x') = signal_std^2 * exp(-0.5 * sum_j l_j^2 (x_j - x'_j)^2)

so *larger* ``l_j`` means a *shorter* correlation length.  Most GP libraries
use the reciprocal convention; hyperparameters ported from elsewhere must be
inverted.
"""

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_solve, solve_triangular

from . import backend
from .domain import Box
from .exceptions import ContractError, InputError, NumericError

#: jitter escalation: start at JITTER_FLOOR * signal_var, x10 per retry
JITTER_FLOOR = 1e-10
MAX_JITTER_RETRIES = 4

#: raw variances below -VAR_NEG_TOL * signal_var indicate a real numeric
#: problem, not round-off, and raise instead of clamping
VAR_NEG_TOL = 1e-8


@dataclass(frozen=True)
class KernelParams:
    """ARD kernel hyperparameters plus observation noise."""

    signal_std: float
    inv_lengthscales: np.ndarray
    noise_std: float

    def __post_init__(self):
        ls = np.atleast_1d(np.asarray(self.inv_lengthscales, dtype=float))
        object.__setattr__(self, "inv_lengthscales", ls)
        object.__setattr__(self, "signal_std", float(self.signal_std))
        object.__setattr__(self, "noise_std", float(self.noise_std))
        if not (np.isfinite(self.signal_std) and self.signal_std > 0):
            raise InputError("signal_std must be a positive real")
        if not (np.isfinite(self.noise_std) and self.noise_std > 0):
            raise InputError("noise_std must be a positive real")
        if ls.ndim != 1 or not (np.isfinite(ls).all() and (ls > 0).all()):
            raise InputError("inv_lengthscales must be positive reals")

    @property
    def dim(self):
        return self.inv_lengthscales.size

    @property
    def signal_var(self):
        return self.signal_std**2

    @property
    def noise_var(self):
        return self.noise_std**2


class Dataset:
    """Training pairs (X, Y); inputs optionally validated against a box domain."""

    def __init__(self, X, Y, domain=None):
        X = np.asarray(X, dtype=float)
        if X.size == 0:
            X = X.reshape(0, X.shape[1] if X.ndim == 2 else 1)
        if X.ndim != 2:
            raise InputError("X must be a (N, m) array of points")
        Y = np.asarray(Y, dtype=float).reshape(-1)
        if Y.size != X.shape[0]:
            raise InputError(f"|X|={X.shape[0]} and |Y|={Y.size} differ")
        if not (np.isfinite(X).all() and np.isfinite(Y).all()):
            raise InputError("training data must be finite")
        if domain is not None:
            if domain.dim != X.shape[1]:
                raise InputError("domain dimension does not match inputs")
            for p, x in enumerate(X):
                if not domain.contains(x):
                    raise InputError(f"training input {p} lies outside the domain")
        self.X = X
        self.Y = Y
        self.domain = domain

    @classmethod
    def empty(cls, dim, domain=None):
        return cls(np.empty((0, dim)), np.empty(0), domain=domain)

    def __len__(self):
        return self.X.shape[0]

    @property
    def dim(self):
        return self.X.shape[1]

    def appended(self, x, y):
        x = _check_point(x, self.dim)
        if self.domain is not None and not self.domain.contains(x):
            raise InputError("new input lies outside the domain")
        if not np.isfinite(y):
            raise InputError("new output must be finite")
        return Dataset(np.vstack([self.X, x[None, :]]),
                       np.append(self.Y, float(y)), domain=self.domain)


@dataclass(frozen=True)
class Prediction:
    """Posterior mean, with variance only when the caller paid for it."""

    mean: float
    variance: float | None = None


def _check_point(x, dim):
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if x.ndim != 1 or x.size != dim:
        raise InputError(f"point has dimension {x.size}, expected {dim}")
    if not np.isfinite(x).all():
        raise InputError("point must be finite")
    return x


def kernel_eval(x, x2, params):
    """Kernel value kappa(x, x2); symmetric, maximal (= signal_var) at x == x2."""
    x = _check_point(x, params.dim)
    x2 = _check_point(x2, params.dim)
    return backend.get().ard_kernel_one(x, x2, params.signal_var,
                                        params.inv_lengthscales)


def gram_matrix(X, params, extra_jitter=0.0):
    """N x N matrix kappa(X, X) + (noise_var + extra_jitter) I, N >= 1."""
    X = np.ascontiguousarray(np.asarray(X, dtype=float))
    if X.ndim != 2 or X.shape[0] < 1:
        raise InputError("gram_matrix needs at least one training point")
    if X.shape[1] != params.dim:
        raise InputError("input dimension does not match kernel parameters")
    K = backend.get().ard_gram(X, params.signal_var, params.inv_lengthscales,
                               params.noise_var + extra_jitter)
    if not np.isfinite(K).all():
        raise NumericError("gram matrix contains non-finite entries")
    return K


def prior_vector(prior, X):
    """Prior mean evaluated at every row of X."""
    batch = getattr(prior, "evaluate_batch", None)
    if batch is not None:
        return np.asarray(batch(X), dtype=float)
    return np.array([float(prior(x)) for x in X], dtype=float)


class GpModel:
    """One agent's GP: kernel parameters, prior mean, data, cached factor.

    A fitted model is treated as an immutable value (safe for concurrent
    reads); ``append_observation`` returns a logically new, stale model and
    ``fit`` refits from scratch.  Monotone counters record how many posterior
    mean/variance evaluations the model has served.
    """

    def __init__(self, params, prior, data=None):
        if data is None:
            data = Dataset.empty(params.dim)
        if data.dim != params.dim:
            raise InputError("dataset dimension does not match kernel parameters")
        self.params = params
        self.prior = prior
        self.data = data
        self.jitter = 0.0
        self._factor = None          # lower-triangular L with L L^T = K(X)
        self._alpha = None           # K(X)^-1 (Y - prior(X))
        self._stale = len(data) > 0
        self.mean_eval_count = 0
        self.var_eval_count = 0

    # -- state ------------------------------------------------------------

    def __len__(self):
        return len(self.data)

    @property
    def is_fitted(self):
        return not self._stale

    @property
    def factor(self):
        return self._factor

    @property
    def residual_weights(self):
        """Cached K(X)^-1 (Y - prior(X)); None for empty models."""
        self._require_fitted()
        return self._alpha

    def reset_counters(self):
        self.mean_eval_count = 0
        self.var_eval_count = 0

    def _require_fitted(self):
        if self._stale:
            raise ContractError("model factor is stale; call fit() first")

    # -- fitting ----------------------------------------------------------

    def fit(self):
        """(Re)factorize the Gram matrix, escalating jitter if needed."""
        if len(self.data) == 0:
            self._factor = None
            self._alpha = None
            self.jitter = 0.0
            self._stale = False
            return self
        X = np.ascontiguousarray(self.data.X)
        residual = self.data.Y - prior_vector(self.prior, X)
        jitter = 0.0
        for attempt in range(MAX_JITTER_RETRIES + 1):
            K = gram_matrix(X, self.params, extra_jitter=jitter)
            try:
                L = np.linalg.cholesky(K)
            except np.linalg.LinAlgError:
                jitter = (JITTER_FLOOR * self.params.signal_var
                          if jitter == 0.0 else jitter * 10.0)
                continue
            self._factor = L
            self._alpha = cho_solve((L, True), residual)
            self.jitter = jitter
            self._stale = False
            return self
        raise NumericError(
            f"Cholesky factorization failed for N={len(self.data)} even with "
            f"jitter {jitter:.3e} after {MAX_JITTER_RETRIES} retries")

    def append_observation(self, x, y):
        """New model with (x, y) added; factor marked stale (full refit later)."""
        model = GpModel(self.params, self.prior, self.data.appended(x, y))
        return model

    # -- prediction -------------------------------------------------------

    def posterior_mean(self, x):
        x = _check_point(x, self.params.dim)
        self.mean_eval_count += 1
        if len(self.data) == 0:
            return float(self.prior(x))
        self._require_fitted()
        return backend.get().posterior_mean_one(
            np.ascontiguousarray(self.data.X), x, self._alpha,
            float(self.prior(x)), self.params.signal_var,
            self.params.inv_lengthscales)

    def posterior_variance(self, x):
        x = _check_point(x, self.params.dim)
        self.var_eval_count += 1
        kxx = self.params.signal_var
        if len(self.data) == 0:
            return kxx
        self._require_fitted()
        raw = backend.get().posterior_var_raw_one(
            np.ascontiguousarray(self.data.X), x, self._factor,
            kxx, self.params.inv_lengthscales)
        return self._clamp_variance(raw, kxx)

    def predict(self, x, with_variance=False):
        mean = self.posterior_mean(x)
        if not with_variance:
            return Prediction(mean=mean)
        return Prediction(mean=mean, variance=self.posterior_variance(x))

    def _clamp_variance(self, raw, kxx):
        if raw < -VAR_NEG_TOL * self.params.signal_var:
            raise NumericError(f"posterior variance {raw:.3e} is negative beyond "
                               "round-off tolerance")
        return float(min(max(raw, 0.0), kxx))

    # -- batched prediction (same math, BLAS-shaped; counters count points) --

    def posterior_mean_batch(self, Xq):
        Xq = np.ascontiguousarray(np.asarray(Xq, dtype=float))
        self.mean_eval_count += Xq.shape[0]
        prior_q = prior_vector(self.prior, Xq)
        if len(self.data) == 0:
            return prior_q
        self._require_fitted()
        cross = backend.get().ard_cross_matrix(
            Xq, np.ascontiguousarray(self.data.X),
            self.params.signal_var, self.params.inv_lengthscales)
        return prior_q + cross @ self._alpha

    def posterior_variance_batch(self, Xq):
        Xq = np.ascontiguousarray(np.asarray(Xq, dtype=float))
        self.var_eval_count += Xq.shape[0]
        kxx = self.params.signal_var
        if len(self.data) == 0:
            return np.full(Xq.shape[0], kxx)
        self._require_fitted()
        cross = backend.get().ard_cross_matrix(
            Xq, np.ascontiguousarray(self.data.X),
            self.params.signal_var, self.params.inv_lengthscales)
        V = solve_triangular(self._factor, cross.T, lower=True)
        raw = kxx - np.einsum("ij,ij->j", V, V)
        if np.any(raw < -VAR_NEG_TOL * self.params.signal_var):
            raise NumericError("posterior variance negative beyond round-off")
        return np.clip(raw, 0.0, kxx)
