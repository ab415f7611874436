import numpy as np
import pytest

from prigp import (AgentSpec, CommGraph, ConfigError, Dataset, EpisodeConfig,
                   KernelParams, Method, NumericError, build_graph,
                   chaos_dynamics, chaos_rhs, euler_step, monte_carlo,
                   resolve_prior, run_episode)
from prigp.sim import DynamicsSpec, neighborhood_trust

ADJ4 = [[1, 1, 1, 0], [1, 1, 0, 1], [1, 0, 1, 1], [0, 1, 1, 1]]


class TestGraph:
    def test_reference_4agent_matrix(self):
        g = build_graph(ADJ4)
        assert g.closed_neighborhood(1) == (1, 2, 3)
        assert g.closed_neighborhood(4) == (2, 3, 4)
        assert g.neighbors(1) == (2, 3)

    def test_identity_matrix(self):
        g = build_graph(np.eye(3, dtype=int))
        for i in g.agents:
            assert g.closed_neighborhood(i) == (i,)

    def test_complete_graph(self):
        g = build_graph(np.ones((3, 3), dtype=int))
        for i in g.agents:
            assert len(g.closed_neighborhood(i)) == 3

    def test_validation(self):
        with pytest.raises(ConfigError):
            build_graph([[1, 1], [0, 1]])          # asymmetric
        with pytest.raises(ConfigError):
            build_graph([[0, 1], [1, 1]])          # zero diagonal
        with pytest.raises(ConfigError):
            build_graph([[1, 2], [2, 1]])          # non-binary
        with pytest.raises(ConfigError):
            build_graph([[1, 1]])                   # not square


class TestDynamics:
    def test_origin_with_true_unknown(self):
        f = resolve_prior("prior.lorenz_f", 3)
        chi = np.zeros(3)
        rhs = chaos_rhs(chi, 10.0, 28.0, f(chi))
        np.testing.assert_allclose(rhs, [0.0, 0.0, -0.25], atol=1e-12)

    def test_first_component_zero_when_x_equals_y(self):
        rhs = chaos_rhs(np.array([1.0, 1.0, 5.0]), 10.0, 28.0, 0.0)
        assert rhs[0] == 0.0

    def test_second_component_minus_y_at_x_zero(self):
        rhs = chaos_rhs(np.array([0.0, 3.0, 5.0]), 10.0, 28.0, 0.0)
        assert rhs[1] == pytest.approx(-3.0)

    def test_expression_path_matches_direct(self, rng):
        spec = chaos_dynamics(s=10.0, r=28.0)
        f = resolve_prior("prior.lorenz_f", 3)
        for _ in range(50):
            chi = rng.uniform(-5, 5, 3)
            np.testing.assert_allclose(spec.rhs(chi, f(chi)),
                                       chaos_rhs(chi, 10.0, 28.0, f(chi)),
                                       atol=1e-12)

    def test_unknown_dim_validation(self):
        with pytest.raises(ConfigError):
            DynamicsSpec(sources=("x",), unknown_dim=3)


class TestEuler:
    def test_zero_rhs(self):
        chi = np.array([1.0, 2.0])
        np.testing.assert_array_equal(euler_step(chi, np.zeros(2), 0.01), chi)

    def test_unit_rhs(self):
        nxt = euler_step(np.zeros(3), np.array([1.0, 0, 0]), 0.01)
        assert nxt[0] == pytest.approx(0.01)

    def test_linear_decay_closed_form(self):
        x = np.array([1.0])
        for _ in range(100):
            x = euler_step(x, -x, 0.01)
        assert x[0] == pytest.approx(0.99**100, rel=1e-12)

    def test_nonfinite_aborts(self):
        with pytest.raises(NumericError):
            euler_step(np.array([1e308]), np.array([1e308]), 1.0)
        with pytest.raises(ConfigError):
            euler_step(np.zeros(1), np.zeros(1), 0.0)


def episode_fixture(method, seed=7, steps=12, noise_std=0.1, sbar=1,
                    track_trajectories=False, audit=False):
    rng = np.random.default_rng(seed)
    graph = build_graph(ADJ4)
    kernel = KernelParams(1.0, [50.0, 50.0, 50.0], 0.1)
    box_lo, box_hi = -30.0, 60.0
    priors = ["prior.lorenz_f", "prior.zero", "prior.lorenz_sin",
              "prior.lorenz_cos"]
    specs = []
    for i in range(1, 5):
        X = rng.uniform(box_lo, box_hi, (20, 3))
        prior = resolve_prior(priors[i - 1], 3)
        truth = resolve_prior("prior.lorenz_f", 3)
        Y = truth.evaluate_batch(X) + rng.normal(0, 0.1, 20)
        specs.append(AgentSpec(agent_id=i, prior=prior, kernel=kernel,
                               dataset=Dataset(X, Y), sbar=sbar, sigma_h=1.0))
    cfg = EpisodeConfig(dynamics=chaos_dynamics(),
                        true_f=resolve_prior("prior.lorenz_f", 3),
                        dt=0.01, steps=steps,
                        initial_state=np.array([0.0, 1.0, 1.05]),
                        method=method, noise_std=noise_std, seed=seed,
                        track_trajectories=track_trajectories, audit=audit)
    return graph, specs, cfg


class TestRunEpisode:
    def test_igp_has_no_remote_messages(self):
        graph, specs, cfg = episode_fixture(Method("igp"))
        result = run_episode(graph, specs, cfg)
        for trace in result.traces:
            for step in trace.agents.values():
                assert step.msgs == 0 and step.elected == (step.agent_id,)

    def test_c1_never_evaluates_variance(self):
        graph, specs, cfg = episode_fixture(Method("prigp", 1.0),
                                            track_trajectories=True)
        result = run_episode(graph, specs, cfg)
        for trace in result.traces:
            for step in trace.agents.values():
                assert step.var_calls == 0
        assert all(m.var_eval_count == 0 for m in result.models.values())

    def test_determinism(self):
        graph, specs, cfg = episode_fixture(Method("prigp", 0.5))
        a = run_episode(graph, specs, cfg)
        graph, specs, cfg = episode_fixture(Method("prigp", 0.5))
        b = run_episode(graph, specs, cfg)
        np.testing.assert_array_equal(a.errors, b.errors)
        for ta, tb in zip(a.traces, b.traces):
            assert ta.state == tb.state
            for i in ta.agents:
                assert ta.agents[i].value == tb.agents[i].value
                assert ta.agents[i].elected == tb.agents[i].elected

    def test_message_economy(self):
        graph, specs, cfg = episode_fixture(Method("prigp", 1.0))
        result = run_episode(graph, specs, cfg)
        for k, trace in enumerate(result.traces):
            for i, step in trace.agents.items():
                if k == 0:
                    assert step.elected == (i,)     # cold start
                else:
                    assert len(step.elected) == len(
                        graph.closed_neighborhood(i)) - 1
                assert step.msgs == sum(1 for j in step.elected if j != i)
        graph, specs, cfg = episode_fixture(Method("moe"))
        result = run_episode(graph, specs, cfg)
        for trace in result.traces:
            for i, step in trace.agents.items():
                assert step.msgs == len(graph.closed_neighborhood(i)) - 1

    def test_trust_bookkeeping_one_record_per_step(self):
        graph, specs, cfg = episode_fixture(Method("moe"), steps=9)
        result = run_episode(graph, specs, cfg)
        assert all(log.count == 9 for log in result.logs.values())

    def test_graph_contract_via_model_counters(self):
        graph, specs, cfg = episode_fixture(Method("moe"), steps=5)
        result = run_episode(graph, specs, cfg)
        for j in graph.agents:
            # model j is queried once per step by each agent whose closed
            # neighborhood contains j (undirected graph: that count is |N|_j)
            expected = 5 * len(graph.closed_neighborhood(j))
            assert result.models[j].mean_eval_count == expected

    def test_weights_rows_sum_to_one(self):
        graph, specs, cfg = episode_fixture(Method("prigp", 0.5))
        result = run_episode(graph, specs, cfg)
        for trace in result.traces:
            for step in trace.agents.values():
                assert sum(step.weights.values()) == pytest.approx(1.0,
                                                                   abs=1e-12)

    def test_trajectories_shape_and_start(self):
        graph, specs, cfg = episode_fixture(Method("igp"), steps=6,
                                            track_trajectories=True)
        result = run_episode(graph, specs, cfg)
        for path in result.trajectories.values():
            assert path.shape == (7, 3)
            np.testing.assert_array_equal(path[0], [0.0, 1.0, 1.05])

    def test_audit_rows(self):
        graph, specs, cfg = episode_fixture(Method("igp"), steps=4, audit=True)
        result = run_episode(graph, specs, cfg)
        assert len(result.audit_rows) == 4 * 4
        step0 = [r for r in result.audit_rows if r[0] == 0]
        assert all(r[4] is None for r in step0)     # no history yet

    def test_agent_id_validation(self):
        graph, specs, cfg = episode_fixture(Method("igp"))
        specs[0].agent_id = 9
        with pytest.raises(ConfigError):
            run_episode(graph, specs, cfg)


class TestNeighborhoodTrust:
    def test_cold_start(self):
        assert neighborhood_trust(1, (1, 2), {1: None, 2: None}) is None

    def test_missing_history_pinned_to_worst(self):
        t = neighborhood_trust(1, (1, 2, 3), {1: 0.1, 2: None, 3: 0.5})
        assert t[2] == t[3] == 1.0
        assert t[1] == 0.0


class TestMonteCarlo:
    def test_single_trial_stats(self):
        def run_trial(seed):
            graph, specs, cfg = episode_fixture(Method("igp"), seed=seed,
                                                steps=5)
            return run_episode(graph, specs, cfg)

        summary = monte_carlo(run_trial, trials=1, base_seed=3)
        np.testing.assert_array_equal(summary.mean_abs_error,
                                      summary.results[0].errors)
        assert (summary.std_abs_error == 0).all()

    def test_identical_trials_zero_std(self):
        def run_trial(_seed):
            graph, specs, cfg = episode_fixture(Method("igp"), seed=11,
                                                steps=5, noise_std=1e-300)
            return run_episode(graph, specs, cfg)

        summary = monte_carlo(run_trial, trials=3, base_seed=0)
        assert np.abs(summary.std_abs_error).max() < 1e-12

    def test_mean_and_std_formulas(self):
        def run_trial(seed):
            graph, specs, cfg = episode_fixture(Method("moe"), seed=seed,
                                                steps=4)
            return run_episode(graph, specs, cfg)

        summary = monte_carlo(run_trial, trials=4, base_seed=5)
        stacked = np.stack([r.errors for r in summary.results])
        np.testing.assert_allclose(summary.mean_abs_error,
                                   stacked.mean(axis=0), atol=1e-15)
        np.testing.assert_allclose(summary.std_abs_error,
                                   stacked.std(axis=0, ddof=0), atol=1e-15)

    def test_trial_seeds_increment(self):
        seen = []

        def run_trial(seed):
            seen.append(seed)
            graph, specs, cfg = episode_fixture(Method("igp"), seed=seed,
                                                steps=2)
            return run_episode(graph, specs, cfg)

        monte_carlo(run_trial, trials=3, base_seed=40)
        assert seen == [40, 41, 42]

    def test_parallel_matches_sequential(self):
        from functools import partial
        from tests_parallel_helper import run_tiny_trial

        seq = monte_carlo(run_tiny_trial, trials=3, base_seed=1,
                          max_workers=1)
        par = monte_carlo(run_tiny_trial, trials=3, base_seed=1,
                          max_workers=2)
        np.testing.assert_array_equal(seq.mean_abs_error, par.mean_abs_error)
