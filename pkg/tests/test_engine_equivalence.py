"""The batched experiment engine must agree with the per-point aggregation
operators to round-off: the per-point operators are the contract, the engine
is the fast route the benchmarks take."""

import numpy as np
import pytest

from prigp import Method
from prigp.aggregate import predict
from prigp.config import build, default_func_approx
from prigp.experiments import (ModelBatchCache, batch_values,
                               build_static_setup)
from prigp.seeding import STREAM_TEST_POINTS, rng_for
from prigp.sim import neighborhood_trust

METHODS = [Method("prigp", 1.0), Method("prigp", 0.5), Method("prigp", 0.0),
           Method("poe"), Method("gpoe"), Method("bcm"), Method("rbcm"),
           Method("moe"), Method("igp")]


@pytest.mark.parametrize("method", METHODS, ids=lambda m: m.label)
def test_engine_matches_pointwise_ops(method):
    raw = default_func_approx()
    raw["test_points"] = 23
    # noisy data exercises nontrivial trust values for every agent
    raw["data_noise_std"] = 0.1
    cfg = build(raw)
    setup = build_static_setup(cfg, cfg.seed)
    Xq = cfg.domain.sample(rng_for(cfg.seed, STREAM_TEST_POINTS),
                           cfg.test_points)
    cache = ModelBatchCache(setup.models, Xq)

    for i in cfg.graph.agents:
        engine = batch_values(method, i, cache, cfg, setup.eps)
        nbhd = cfg.graph.closed_neighborhood(i)
        local = {j: setup.models[j] for j in nbhd}
        spec = next(a for a in cfg.agents if a.agent_id == i)
        for q in range(cfg.test_points):
            if method.name == "prigp":
                trust = neighborhood_trust(i, nbhd, setup.eps)
                res = predict(method, i, Xq[q], local, trust=trust,
                              sbar=spec.sbar, sigma_h=spec.sigma_h,
                              election_rule=cfg.election_rule,
                              variance_weight_rule=cfg.variance_weight_rule)
            else:
                res = predict(method, i, Xq[q], local)
            assert engine[q] == pytest.approx(res.value, abs=1e-12), \
                f"agent {i}, point {q}"


def test_engine_counters_reflect_variance_usage():
    raw = default_func_approx()
    raw["test_points"] = 11
    cfg = build(raw)
    setup = build_static_setup(cfg, cfg.seed)
    Xq = cfg.domain.sample(rng_for(cfg.seed, STREAM_TEST_POINTS), 11)

    for model in setup.models.values():
        model.reset_counters()
    cache = ModelBatchCache(setup.models, Xq)
    for i in cfg.graph.agents:
        batch_values(Method("prigp", 1.0), i, cache, cfg, setup.eps)
    assert sum(m.var_eval_count for m in setup.models.values()) == 0

    for model in setup.models.values():
        model.reset_counters()
    cache = ModelBatchCache(setup.models, Xq)
    for i in cfg.graph.agents:
        batch_values(Method("poe"), i, cache, cfg, setup.eps)
    assert sum(m.var_eval_count for m in setup.models.values()) > 0
