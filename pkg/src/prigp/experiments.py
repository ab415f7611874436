"""Benchmark experiment engines behind the CLI subcommands.

The static experiments (function approximation, bound coverage) use batched
model queries so that thousands of test points cost a few BLAS calls; the
batched combination formulas are pinned to the per-point aggregators by an
equivalence test in the suite.  The identification experiment runs the full
synchronous per-step loop from ``prigp.sim``.
"""

import math
from dataclasses import dataclass
from functools import partial

import numpy as np

from .aggregate import Method
from .bounds import (BoundParams, ard_kernel_lipschitz, beta_constant,
                     gamma_constant, overall_bound, variance_lipschitz)
from .elective import VARIANCE_FLOOR, elect, prior_weights
from .exceptions import NumericError
from .expr import lipschitz_estimate
from .gp import Dataset, GpModel
from .seeding import (STREAM_DATASET, STREAM_INITIAL_STATE,
                      STREAM_TEST_POINTS, rng_for)
from .sim import (AgentSpec, EpisodeConfig, monte_carlo, neighborhood_trust,
                  run_episode)
from .trust import PriorErrorLog

# ---------------------------------------------------------------------------
# Shared static setup: fit agents on one drawn dataset, build trust from the
# training measurement stream
# ---------------------------------------------------------------------------


@dataclass
class StaticSetup:
    models: dict          # agent id -> fitted GpModel
    eps: dict             # agent id -> accumulated |prior error| mean
    logs: dict            # agent id -> PriorErrorLog
    X: np.ndarray
    Y: np.ndarray


def build_static_setup(cfg, seed, audit=False):
    """Draw the shared training set, fit every agent, replay the training
    measurements through each agent's prior-error log."""
    rng = rng_for(seed, STREAM_DATASET)
    X = cfg.domain.sample(rng, cfg.train_size)
    noise = rng.normal(0.0, cfg.data_noise_std, cfg.train_size)
    Y = cfg.target.evaluate_batch(X) + noise

    models = {}
    logs = {}
    eps = {}
    for a in cfg.agents:
        models[a.agent_id] = GpModel(cfg.kernel, a.prior,
                                     Dataset(X, Y, domain=cfg.domain)).fit()
        log = PriorErrorLog(a.agent_id, keep_history=audit)
        prior_at_X = a.prior.evaluate_batch(X)
        for p in range(len(X)):
            log.record(prior_at_X[p], Y[p], t=p, x=X[p])
        logs[a.agent_id] = log
        eps[a.agent_id] = log.accumulated()
    return StaticSetup(models=models, eps=eps, logs=logs, X=X, Y=Y)


# ---------------------------------------------------------------------------
# Batched aggregation engine
# ---------------------------------------------------------------------------


class ModelBatchCache:
    """Lazy per-model mean/variance vectors over a fixed query set.

    Vectors are computed on first use only, so a trust-only pipeline never
    touches any variance path (the models' counters prove it).
    """

    def __init__(self, models, Xq):
        self.models = models
        self.Xq = Xq
        self._means = {}
        self._vars = {}

    def mean(self, j):
        if j not in self._means:
            self._means[j] = self.models[j].posterior_mean_batch(self.Xq)
        return self._means[j]

    def var(self, j):
        if j not in self._vars:
            self._vars[j] = self.models[j].posterior_variance_batch(self.Xq)
        return self._vars[j]


def _h_sigma_array(variances, rule):
    floored = np.maximum(variances, VARIANCE_FLOOR)
    return 1.0 / floored if rule == "inverse" else 1.0 / floored**2


def _spec_for(cfg, agent_id):
    for a in cfg.agents:
        if a.agent_id == agent_id:
            return a
    raise KeyError(agent_id)


def batch_values(method, agent_id, cache, cfg, eps):
    """Fused prediction vector for one aggregating agent over the query set."""
    nbhd = cfg.graph.closed_neighborhood(agent_id)

    if method.name == "igp":
        return cache.mean(agent_id).copy()
    if method.name == "moe":
        return np.mean([cache.mean(j) for j in nbhd], axis=0)

    if method.name in ("poe", "gpoe"):
        V = np.stack([cache.var(j) for j in nbhd])
        if np.any(V <= VARIANCE_FLOOR):
            raise NumericError("variance at or below floor in precision weights")
        M = np.stack([cache.mean(j) for j in nbhd])
        W = 1.0 / V
        return (W * M).sum(axis=0) / W.sum(axis=0)

    if method.name in ("bcm", "rbcm"):
        own = cache.models[agent_id]
        prior_var = own.params.signal_var + own.params.noise_var
        prior_vec = _spec_for(cfg, agent_id).prior.evaluate_batch(cache.Xq)
        V = np.stack([cache.var(j) for j in nbhd])
        if np.any(V <= VARIANCE_FLOOR):
            raise NumericError("variance at or below floor in committee weights")
        M = np.stack([cache.mean(j) for j in nbhd])
        m_count = len(nbhd)
        if method.name == "bcm":
            s = (1.0 / V).sum(axis=0) - (m_count - 1) / prior_var
            if np.any(s <= VARIANCE_FLOOR):
                raise NumericError("BCM precision nonpositive at some query point")
            return ((M / V).sum(axis=0)
                    - (m_count - 1) * prior_vec / prior_var) / s
        betas = 0.5 * (math.log(prior_var) - np.log(V))
        beta_sum = betas.sum(axis=0)
        precision = (betas / V).sum(axis=0) + (1.0 - beta_sum) / prior_var
        if np.any(precision <= VARIANCE_FLOOR):
            raise NumericError("RBCM precision nonpositive at some query point")
        return ((betas * M / V).sum(axis=0)
                + (1.0 - beta_sum) * prior_vec / prior_var) / precision

    # prigp
    spec = _spec_for(cfg, agent_id)
    trust = neighborhood_trust(agent_id, nbhd, eps)
    if trust is None:
        return cache.mean(agent_id).copy()
    election = elect(trust, spec.sbar, agent_id, rule=cfg.election_rule)
    means = {j: cache.mean(j) for j in election.elected}
    if method.c == 1.0:
        w_eps = prior_weights(election, trust, spec.sigma_h)
        return sum(w_eps[j] * means[j] for j in election.elected)
    # per-point weights; constant normalizers cancel after renormalization,
    # so raw h values can stand in for the normalized maps
    rows = []
    for j in election.elected:
        h_sig = _h_sigma_array(cache.var(j), cfg.variance_weight_rule)
        if method.c == 0.0:
            rows.append(h_sig)
        else:
            w_eps = prior_weights(election, trust, spec.sigma_h)
            rows.append(w_eps[j]**method.c * h_sig**(1.0 - method.c))
    W = np.stack(rows)
    M = np.stack([means[j] for j in election.elected])
    return (W * M).sum(axis=0) / W.sum(axis=0)


def static_election(cfg, eps, agent_id):
    """Election from the static trust signal (None on cold start)."""
    nbhd = cfg.graph.closed_neighborhood(agent_id)
    trust = neighborhood_trust(agent_id, nbhd, eps)
    if trust is None:
        return None, None
    spec = _spec_for(cfg, agent_id)
    return elect(trust, spec.sbar, agent_id, rule=cfg.election_rule), trust


# ---------------------------------------------------------------------------
# Function approximation
# ---------------------------------------------------------------------------


@dataclass
class MethodOutcome:
    method: Method
    label: str
    per_agent_mean_error: dict      # agent id -> mean |error|
    sum_error: float
    values: dict                    # agent id -> prediction vector
    queried: dict                   # agent id -> agents aggregated over
    messages_per_query: dict        # agent id -> remote agents contacted
    mean_evals: int                 # measured across all models
    var_evals: int                  # measured across all models


@dataclass
class FuncApproxResult:
    seed: int
    agent_ids: tuple
    test_points: np.ndarray
    f_true: np.ndarray
    outcomes: list
    setup: StaticSetup


def run_func_approx(cfg, seed=None):
    seed = cfg.seed if seed is None else seed
    setup = build_static_setup(cfg, seed, audit=cfg.audit)
    Xq = cfg.domain.sample(rng_for(seed, STREAM_TEST_POINTS), cfg.test_points)
    f_true = cfg.target.evaluate_batch(Xq)

    outcomes = []
    for method in cfg.methods:
        for model in setup.models.values():
            model.reset_counters()
        cache = ModelBatchCache(setup.models, Xq)
        values = {}
        queried = {}
        messages = {}
        errors = {}
        for i in cfg.graph.agents:
            values[i] = batch_values(method, i, cache, cfg, setup.eps)
            errors[i] = float(np.mean(np.abs(values[i] - f_true)))
            nbhd = cfg.graph.closed_neighborhood(i)
            if method.name == "igp":
                queried[i] = (i,)
            elif method.name == "prigp":
                election, _ = static_election(cfg, setup.eps, i)
                queried[i] = (i,) if election is None else election.elected
            else:
                queried[i] = nbhd
            messages[i] = sum(1 for j in queried[i] if j != i)
        outcomes.append(MethodOutcome(
            method=method, label=method.label,
            per_agent_mean_error=errors,
            sum_error=float(sum(errors.values())),
            values=values, queried=queried, messages_per_query=messages,
            mean_evals=sum(m.mean_eval_count for m in setup.models.values()),
            var_evals=sum(m.var_eval_count for m in setup.models.values()),
        ))
    return FuncApproxResult(seed=seed, agent_ids=cfg.graph.agents,
                            test_points=Xq, f_true=f_true,
                            outcomes=outcomes, setup=setup)


# ---------------------------------------------------------------------------
# Dynamical system identification
# ---------------------------------------------------------------------------


def dyn_ident_trial(cfg, method, seed):
    """One seeded episode: fresh per-agent datasets, fresh initial state."""
    rng = rng_for(seed, STREAM_DATASET)
    specs = []
    for a in cfg.agents:
        X = cfg.domain.sample(rng, cfg.train_size)
        Y = (cfg.target.evaluate_batch(X)
             + rng.normal(0.0, cfg.data_noise_std, cfg.train_size))
        specs.append(AgentSpec(agent_id=a.agent_id, prior=a.prior,
                               kernel=cfg.kernel,
                               dataset=Dataset(X, Y, domain=cfg.domain),
                               sbar=a.sbar, sigma_h=a.sigma_h))
    dyn = cfg.dynamics
    if dyn.use_random_initial:
        lo, hi = dyn.random_initial_range
        chi0 = rng_for(seed, STREAM_INITIAL_STATE).uniform(lo, hi, cfg.domain.dim)
    else:
        chi0 = np.asarray(dyn.initial_state)
    episode = EpisodeConfig(
        dynamics=dyn.spec, true_f=cfg.target, dt=dyn.dt, steps=dyn.steps,
        initial_state=chi0, method=method, noise_std=cfg.kernel.noise_std,
        seed=seed, election_rule=cfg.election_rule,
        variance_weight_rule=cfg.variance_weight_rule,
        track_trajectories=dyn.trajectories, audit=cfg.audit)
    return run_episode(cfg.graph, specs, episode)


@dataclass
class DynIdentResult:
    seed: int
    trials: int
    dt: float
    agent_ids: tuple
    methods: list
    summaries: dict      # method label -> MonteCarloSummary


def run_dyn_ident(cfg):
    summaries = {}
    for method in cfg.methods:
        runner = partial(dyn_ident_trial, cfg, method)
        summaries[method.label] = monte_carlo(runner, cfg.trials, cfg.seed)
    return DynIdentResult(seed=cfg.seed, trials=cfg.trials,
                          dt=cfg.dynamics.dt, agent_ids=cfg.graph.agents,
                          methods=cfg.methods, summaries=summaries)


# ---------------------------------------------------------------------------
# Bound coverage
# ---------------------------------------------------------------------------


@dataclass
class AgentBoundReport:
    agent_id: int
    gamma: float
    l_sigma2: float
    lipschitz_prior: float
    eta: np.ndarray                  # per-point single-model bound
    abs_error: np.ndarray            # per-point |mean - f|
    violation_rate: float
    eta_agg: np.ndarray              # per-point fused bound
    abs_error_agg: np.ndarray        # per-point |fused - f|
    violation_rate_agg: float
    elected: tuple


@dataclass
class BoundsCheckResult:
    seed: int
    beta: float
    lipschitz_f: float
    lipschitz_kernel: float
    delta: float
    tau: float
    c: float
    sigma_reading: str
    test_points: np.ndarray
    agents: list                     # AgentBoundReport, ascending id
    overall: object                  # OverallBound (mean fused bounds)
    overall_violation_rate: float    # joint per-point coverage


def run_bounds_check(cfg, seed=None):
    seed = cfg.seed if seed is None else seed
    bc = cfg.bounds
    setup = build_static_setup(cfg, seed, audit=cfg.audit)
    params = BoundParams(tau=bc.tau, delta=bc.delta, box=cfg.domain,
                         lipschitz_f=bc.lipschitz_f,
                         lipschitz_prior=bc.lipschitz_prior,
                         lipschitz_kernel=bc.lipschitz_kernel,
                         sigma_reading=bc.sigma_reading)
    beta = beta_constant(params)
    l_f = (params.lipschitz_f if params.lipschitz_f is not None
           else lipschitz_estimate(cfg.target.ast, cfg.domain))
    l_kernel = (params.lipschitz_kernel if params.lipschitz_kernel is not None
                else ard_kernel_lipschitz(cfg.kernel))

    Xq = cfg.domain.sample(rng_for(seed, STREAM_TEST_POINTS), cfg.test_points)
    f_true = cfg.target.evaluate_batch(Xq)
    sqrt_beta = math.sqrt(beta)

    means = {}
    etas = {}
    gammas = {}
    l_sig2s = {}
    l_priors = {}
    for a in cfg.agents:
        model = setup.models[a.agent_id]
        l_prior = (params.lipschitz_prior if params.lipschitz_prior is not None
                   else a.prior.lipschitz(cfg.domain))
        l_sig2 = variance_lipschitz(model, l_kernel)
        gamma = gamma_constant(model, params, beta, l_sig2, l_f, l_prior,
                               l_kernel)
        variances = model.posterior_variance_batch(Xq)
        sd = np.sqrt(variances) if bc.sigma_reading == "std" else variances
        means[a.agent_id] = model.posterior_mean_batch(Xq)
        etas[a.agent_id] = sqrt_beta * sd + gamma * bc.tau
        gammas[a.agent_id] = gamma
        l_sig2s[a.agent_id] = l_sig2
        l_priors[a.agent_id] = l_prior

    method = Method(name="prigp", c=bc.c)
    reports = []
    fused_bounds_mean = {}
    elected_sizes = {}
    agg_err_rows = []
    agg_eta_rows = []
    for a in cfg.agents:
        i = a.agent_id
        election, trust = static_election(cfg, setup.eps, i)
        elected = (i,) if election is None else election.elected
        elected_sizes[i] = len(elected)

        if election is None:
            fused = means[i].copy()
            eta_agg = etas[i].copy()
        elif bc.c == 1.0:
            w_eps = prior_weights(election, trust, a.sigma_h)
            fused = sum(w_eps[j] * means[j] for j in elected)
            eta_agg = sum(w_eps[j] * etas[j] for j in elected)
        else:
            rows = []
            for j in elected:
                h_sig = _h_sigma_array(
                    setup.models[j].posterior_variance_batch(Xq),
                    cfg.variance_weight_rule)
                if bc.c == 0.0:
                    rows.append(h_sig)
                else:
                    w_eps = prior_weights(election, trust, a.sigma_h)
                    rows.append(w_eps[j]**bc.c * h_sig**(1.0 - bc.c))
            W = np.stack(rows)
            total = W.sum(axis=0)
            fused = (W * np.stack([means[j] for j in elected])).sum(axis=0) / total
            eta_agg = (W * np.stack([etas[j] for j in elected])).sum(axis=0) / total

        abs_err = np.abs(means[i] - f_true)
        abs_err_agg = np.abs(fused - f_true)
        reports.append(AgentBoundReport(
            agent_id=i, gamma=gammas[i], l_sigma2=l_sig2s[i],
            lipschitz_prior=l_priors[i],
            eta=etas[i], abs_error=abs_err,
            violation_rate=float(np.mean(abs_err > etas[i])),
            eta_agg=eta_agg, abs_error_agg=abs_err_agg,
            violation_rate_agg=float(np.mean(abs_err_agg > eta_agg)),
            elected=elected))
        fused_bounds_mean[i] = float(np.mean(eta_agg))
        agg_err_rows.append(abs_err_agg)
        agg_eta_rows.append(eta_agg)

    overall = overall_bound(fused_bounds_mean, elected_sizes, bc.delta)
    joint_err = np.linalg.norm(np.stack(agg_err_rows), axis=0)
    joint_eta = np.linalg.norm(np.stack(agg_eta_rows), axis=0)
    return BoundsCheckResult(
        seed=seed, beta=beta, lipschitz_f=l_f, lipschitz_kernel=l_kernel,
        delta=bc.delta, tau=bc.tau, c=bc.c, sigma_reading=bc.sigma_reading,
        test_points=Xq, agents=reports, overall=overall,
        overall_violation_rate=float(np.mean(joint_err > joint_eta)))
