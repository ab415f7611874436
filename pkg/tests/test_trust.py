import numpy as np
import pytest

from prigp import (ContractError, Dataset, GpModel, InputError, KernelParams,
                   NormalizedTrust, PriorErrorLog, normalize_neighborhood,
                   prior_error_identity, resolve_prior)

from conftest import random_model


class TestPriorErrorLog:
    def test_signed_error(self):
        log = PriorErrorLog(1)
        assert log.record(0.0, 0.5) == pytest.approx(-0.5)

    def test_zero_error_leaves_sum(self):
        log = PriorErrorLog(1)
        log.record(0.7, 0.7)
        assert log.count == 1 and log.sum_abs == 0.0

    def test_sequence_arithmetic(self):
        log = PriorErrorLog(1)
        for e in (1.0, -2.0, 3.0):
            log.record(e, 0.0)
        assert log.count == 3
        assert log.sum_abs == pytest.approx(6.0)
        assert log.accumulated() == pytest.approx(2.0)

    def test_empty_sentinel(self):
        assert PriorErrorLog(1).accumulated() is None

    def test_single_and_zero(self):
        log = PriorErrorLog(1)
        log.record(0.7, 0.0)
        assert log.accumulated() == pytest.approx(0.7)
        log2 = PriorErrorLog(2)
        for _ in range(5):
            log2.record(1.0, 1.0)
        assert log2.accumulated() == 0.0

    def test_nonfinite_rejected(self):
        with pytest.raises(InputError):
            PriorErrorLog(1).record(float("nan"), 0.0)

    def test_running_mean_matches_bruteforce(self, rng):
        log = PriorErrorLog(1, keep_history=True)
        collected = []
        for _ in range(50):
            e = log.record(rng.normal(), rng.normal())
            collected.append(abs(e))
            assert log.accumulated() == pytest.approx(
                np.mean(collected), abs=1e-12)
        assert log.sum_abs == pytest.approx(
            sum(abs(e) for _, _, e in log.history), abs=1e-12)


class TestNormalize:
    def test_three_values(self):
        t = normalize_neighborhood({1: 0.2, 2: 0.5, 3: 0.8})
        assert t[1] == 0.0 and t[2] == pytest.approx(0.5) and t[3] == 1.0
        assert t.eps_min == pytest.approx(0.2)
        assert t.eps_max == pytest.approx(0.8)

    def test_degenerate_all_equal(self):
        t = normalize_neighborhood({1: 0.3, 2: 0.3})
        assert t[1] == 0.0 and t[2] == 0.0

    def test_unordered(self):
        t = normalize_neighborhood({1: 5.0, 2: 1.0, 3: 3.0})
        assert (t[1], t[2], t[3]) == (1.0, 0.0, 0.5)

    def test_scale_invariance(self, rng):
        for _ in range(50):
            vals = {j: float(v) for j, v in
                    enumerate(rng.uniform(0, 10, int(rng.integers(2, 8))))}
            a = normalize_neighborhood(vals)
            b = normalize_neighborhood({j: 7.3 * v for j, v in vals.items()})
            for j in vals:
                assert a[j] == pytest.approx(b[j], abs=1e-12)

    def test_range_and_order_preserved(self, rng):
        for _ in range(50):
            vals = {j: float(v) for j, v in
                    enumerate(rng.uniform(-5, 5, int(rng.integers(1, 9))))}
            t = normalize_neighborhood(vals)
            for j, v in vals.items():
                assert 0.0 <= t[j] <= 1.0
                for j2, v2 in vals.items():
                    if v <= v2:
                        assert t[j] <= t[j2] + 1e-15

    def test_nonfinite_rejected(self):
        with pytest.raises(InputError):
            normalize_neighborhood({1: float("inf")})
        with pytest.raises(InputError):
            normalize_neighborhood({})


class TestResidualIdentity:
    """Two routes to the training-set prior error must coincide:
    Y - prior(X) == (I + K(X,X)/noise_var) (Y - mean(X))."""

    def test_fuzzed_models(self, rng, kernel_backend):
        worst = 0.0
        for _ in range(40):
            m = random_model(rng)
            report = prior_error_identity(m)
            worst = max(worst, report.max_abs_deviation)
            assert report.mean_abs_direct == pytest.approx(
                report.mean_abs_transformed, abs=1e-8)
        assert worst < 1e-8

    def test_scalar_closed_form(self):
        # N=1: y - prior = (1 + kappa(x,x)/noise^2) * (y - mean)
        prior = resolve_prior("prior.neg_one", 1)
        m = GpModel(KernelParams(1.0, [0.2], 0.1), prior,
                    Dataset([[0.4]], [0.9])).fit()
        y, fhat = 0.9, -1.0
        mean = m.posterior_mean([0.4])
        lhs = y - fhat
        rhs = (1.0 + 1.0 / 0.01) * (y - mean)
        assert lhs == pytest.approx(rhs, rel=1e-10)
        report = prior_error_identity(m)
        assert report.max_abs_deviation < 1e-10

    def test_perfect_prior_noise_free(self, rng):
        prior = resolve_prior("prior.sin2x", 1)
        X = rng.uniform(0, 6, (10, 1))
        m = GpModel(KernelParams(1.0, [0.2], 0.1), prior,
                    Dataset(X, np.sin(2 * X[:, 0]))).fit()
        report = prior_error_identity(m)
        assert report.mean_abs_direct < 1e-12
        assert report.mean_abs_transformed < 1e-10

    def test_requires_fitted_nonempty(self):
        m = GpModel(KernelParams(1.0, [0.2], 0.1),
                    resolve_prior("prior.zero", 1))
        with pytest.raises(ContractError):
            prior_error_identity(m)
        stale = m.append_observation([0.1], 0.2)
        with pytest.raises(ContractError):
            prior_error_identity(stale)


def test_normalized_trust_members():
    t = NormalizedTrust(values={3: 0.0, 1: 1.0}, eps_min=0.0, eps_max=1.0)
    assert t.members() == [1, 3]
