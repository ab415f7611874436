import math

import numpy as np
import pytest

from prigp import (Box, ContractError, Dataset, GpModel, InputError,
                   KernelParams, NumericError, gram_matrix, kernel_eval,
                   resolve_prior)
from prigp.gp import prior_vector

from conftest import random_model

ZERO = resolve_prior("prior.zero", 1)


def params1(signal_std=1.0, inv_ls=0.2, noise_std=0.1):
    return KernelParams(signal_std, [inv_ls], noise_std)


# ---------------------------------------------------------------------------
# kernel_eval
# ---------------------------------------------------------------------------


class TestKernelEval:
    def test_zero_distance(self, kernel_backend):
        assert kernel_eval([0.7], [0.7], params1()) == pytest.approx(1.0)

    def test_hand_value(self, kernel_backend):
        # sigma_r=1, l=0.2, x=0, x2=1: exp(-0.5 * 0.04 * 1)
        assert kernel_eval([0.0], [1.0], params1()) == pytest.approx(
            math.exp(-0.02), rel=1e-14)

    def test_signal_scales_quadratically(self, rng):
        for _ in range(20):
            x, x2 = rng.normal(size=1), rng.normal(size=1)
            base = kernel_eval(x, x2, params1(signal_std=1.0))
            assert kernel_eval(x, x2, params1(signal_std=2.0)) == pytest.approx(
                4.0 * base, rel=1e-13)

    def test_symmetry_exact(self, rng):
        p = KernelParams(1.3, rng.uniform(0.1, 2.0, 3), 0.1)
        for _ in range(200):
            x, x2 = rng.normal(size=3), rng.normal(size=3)
            assert kernel_eval(x, x2, p) == kernel_eval(x2, x, p)

    def test_dimension_mismatch(self):
        with pytest.raises(InputError):
            kernel_eval([0.0, 1.0], [0.0], params1())

    def test_invalid_params(self):
        with pytest.raises(InputError):
            KernelParams(-1.0, [0.2], 0.1)
        with pytest.raises(InputError):
            KernelParams(1.0, [0.0], 0.1)
        with pytest.raises(InputError):
            KernelParams(1.0, [0.2], 0.0)


# ---------------------------------------------------------------------------
# gram_matrix
# ---------------------------------------------------------------------------


class TestGramMatrix:
    def test_single_point(self):
        K = gram_matrix(np.array([[0.3]]), params1())
        assert K.shape == (1, 1)
        assert K[0, 0] == pytest.approx(1.01, rel=1e-14)

    def test_exact_symmetry(self, rng, kernel_backend):
        X = rng.normal(size=(12, 2))
        K = gram_matrix(X, KernelParams(1.0, [0.5, 1.5], 0.2))
        assert (K == K.T).all()

    def test_duplicated_point_still_pd(self):
        X = np.array([[1.0], [1.0], [2.0]])
        K = gram_matrix(X, params1())
        np.linalg.cholesky(K)    # succeeds: noise keeps eigenvalues >= noise^2
        assert np.linalg.eigvalsh(K).min() >= 0.1**2 - 1e-12

    def test_empty_rejected(self):
        with pytest.raises(InputError):
            gram_matrix(np.empty((0, 1)), params1())


# ---------------------------------------------------------------------------
# fit / append
# ---------------------------------------------------------------------------


class TestFit:
    def test_empty_model_trivially_fresh(self):
        m = GpModel(params1(), ZERO)
        assert m.is_fitted
        assert m.factor is None

    def test_factor_reconstruction(self, rng, kernel_backend):
        m = random_model(rng, n=10, dim=2)
        K = gram_matrix(m.data.X, m.params, extra_jitter=m.jitter)
        rec = m.factor @ m.factor.T
        assert np.abs(rec - K).max() < 1e-10 * np.abs(K).max()

    def test_jitter_escalation_on_degenerate_data(self):
        # two bit-identical inputs and noise far below float resolution of
        # the unit diagonal force the jitter path
        X = np.array([[1.0], [1.0]])
        Y = np.array([0.5, 0.6])
        m = GpModel(params1(noise_std=1e-8), ZERO, Dataset(X, Y)).fit()
        assert m.jitter > 0.0
        assert m.is_fitted

    def test_append_marks_stale_then_refit_matches_scratch(self, rng):
        m = random_model(rng, n=6, dim=1)
        x_new, y_new = np.array([0.37]), 0.9
        appended = m.append_observation(x_new, y_new)
        assert not appended.is_fitted
        with pytest.raises(ContractError):
            appended.posterior_mean([0.0])
        appended.fit()
        scratch = GpModel(m.params, m.prior,
                          Dataset(np.vstack([m.data.X, x_new[None, :]]),
                                  np.append(m.data.Y, y_new))).fit()
        for _ in range(20):
            x = rng.uniform(-2, 2, 1)
            assert appended.posterior_mean(x) == pytest.approx(
                scratch.posterior_mean(x), abs=1e-12)
            assert appended.posterior_variance(x) == pytest.approx(
                scratch.posterior_variance(x), abs=1e-12)

    def test_append_out_of_domain(self):
        data = Dataset.empty(1, domain=Box([0.0], [1.0]))
        m = GpModel(params1(), ZERO, data)
        with pytest.raises(InputError):
            m.append_observation([2.0], 0.0)

    def test_append_to_empty_then_fit_shrinks_residual(self):
        m = GpModel(params1(), ZERO).append_observation([0.5], 1.0).fit()
        # scalar form: y * kappa(x,x) / (kappa(x,x) + noise^2)
        assert m.posterior_mean([0.5]) == pytest.approx(1.0 / 1.01, rel=1e-12)


# ---------------------------------------------------------------------------
# posterior mean / variance
# ---------------------------------------------------------------------------


class TestPosterior:
    def test_empty_model_returns_prior(self, rng):
        prior = resolve_prior("sin(2*x)", 1)
        m = GpModel(params1(), prior)
        for _ in range(10):
            x = rng.uniform(0, 6, 1)
            assert m.posterior_mean(x) == pytest.approx(prior(x))
            assert m.posterior_variance(x) == pytest.approx(1.0)

    def test_single_pair_scalar_form(self, kernel_backend):
        m = GpModel(params1(), ZERO, Dataset([[0.5]], [2.0])).fit()
        assert m.posterior_mean([0.5]) == pytest.approx(2.0 / 1.01, rel=1e-12)

    def test_perfect_prior_noise_free_data(self, rng):
        prior = resolve_prior("prior.sin2x", 1)
        X = rng.uniform(0, 6, (8, 1))
        m = GpModel(params1(), prior, Dataset(X, np.sin(2 * X[:, 0]))).fit()
        for _ in range(20):
            x = rng.uniform(0, 6, 1)
            assert m.posterior_mean(x) == pytest.approx(prior(x), abs=1e-12)

    def test_variance_at_training_point_small(self, rng):
        m = random_model(rng, n=8, dim=1, noise_std=0.01)
        p = int(rng.integers(8))
        assert m.posterior_variance(m.data.X[p]) < 0.01**2 + 1e-6

    def test_variance_bounds_fuzzed(self, rng, kernel_backend):
        for _ in range(25):
            m = random_model(rng)
            for _ in range(40):
                v = m.posterior_variance(rng.uniform(-3, 3, m.params.dim))
                assert 0.0 <= v <= m.params.signal_var + 1e-15

    def test_interpolation_small_noise(self, rng):
        X = np.linspace(0.0, 3.0, 8)[:, None]
        Y = rng.normal(size=8)
        m = GpModel(KernelParams(1.0, [1.0], 1e-6), ZERO, Dataset(X, Y)).fit()
        for p in range(8):
            assert abs(m.posterior_mean(X[p]) - Y[p]) < 1e-3

    def test_prior_shift_consistency(self, rng):
        X = rng.uniform(-2, 2, (10, 1))
        Y = rng.normal(size=10)
        b = 3.7
        base = GpModel(params1(), ZERO, Dataset(X, Y)).fit()
        shifted = GpModel(params1(), resolve_prior(repr(b), 1),
                          Dataset(X, Y + b)).fit()
        for _ in range(20):
            x = rng.uniform(-2, 2, 1)
            assert shifted.posterior_mean(x) - base.posterior_mean(x) == \
                pytest.approx(b, abs=1e-10)
            assert shifted.posterior_variance(x) == pytest.approx(
                base.posterior_variance(x), abs=1e-10)

    def test_batch_matches_pointwise(self, rng, kernel_backend):
        m = random_model(rng, n=12, dim=2)
        Xq = rng.uniform(-2, 2, (15, 2))
        means = m.posterior_mean_batch(Xq)
        variances = m.posterior_variance_batch(Xq)
        for p in range(15):
            assert means[p] == pytest.approx(m.posterior_mean(Xq[p]), abs=1e-11)
            assert variances[p] == pytest.approx(
                m.posterior_variance(Xq[p]), abs=1e-11)

    def test_variance_counter(self, rng):
        m = random_model(rng, n=5, dim=1)
        m.reset_counters()
        m.posterior_variance([0.1])
        m.posterior_variance([0.2])
        m.posterior_mean([0.3])
        assert m.var_eval_count == 2
        assert m.mean_eval_count == 1
        m.posterior_variance_batch(np.zeros((7, 1)))
        assert m.var_eval_count == 9
        m.reset_counters()
        assert m.var_eval_count == 0

    def test_prediction_container(self, rng):
        m = random_model(rng, n=4, dim=1)
        p = m.predict([0.2])
        assert p.variance is None
        p = m.predict([0.2], with_variance=True)
        assert 0.0 <= p.variance <= m.params.signal_var


def test_prior_vector_uses_batch_path(rng):
    prior = resolve_prior("prior.cos2x", 1)
    X = rng.uniform(0, 6, (9, 1))
    np.testing.assert_allclose(prior_vector(prior, X),
                               [prior(x) for x in X], atol=1e-15)


def test_dataset_validation():
    with pytest.raises(InputError):
        Dataset([[0.0], [1.0]], [0.0])
    with pytest.raises(InputError):
        Dataset([[np.nan]], [0.0])
    with pytest.raises(InputError):
        Dataset([[2.0]], [0.0], domain=Box([0.0], [1.0]))
