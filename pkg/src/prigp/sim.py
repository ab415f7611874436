"""Multi-agent simulation fabric: dynamics integration, the synchronous
per-step learning loop, and Monte Carlo orchestration.

Per step, every agent (1) hears its neighbors' scalar error scores,
(2) normalizes them over its own closed neighborhood, elects collaborators
and fuses their predictions at the current true state, then (3) the true
system advances one explicit Euler step and (4) a noisy measurement of the
unknown component arrives and every agent logs its prior error against it.
All randomness comes from per-episode seeded streams, so identical
(config, seed) pairs reproduce bit-identical traces.
"""

import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import aggregate
from .aggregate import Method
from .exceptions import ConfigError, NumericError
from .expr import evaluate, parse
from .gp import GpModel
from .seeding import STREAM_EPISODE, rng_for, trial_seed
from .trust import PriorErrorLog, normalize_neighborhood

# ---------------------------------------------------------------------------
# Agents
# ---------------------------------------------------------------------------


@dataclass
class AgentSpec:
    """Everything one agent brings to an episode."""

    agent_id: int
    prior: object                 # callable point -> float (PriorMeanFunction)
    kernel: object                # KernelParams
    dataset: object               # Dataset
    sbar: int
    sigma_h: float = 1.0

    def build_model(self):
        return GpModel(self.kernel, self.prior, self.dataset).fit()


# ---------------------------------------------------------------------------
# Dynamics
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DynamicsSpec:
    """Right-hand side split into a known expression per state dimension and
    one additive unknown-component slot."""

    sources: tuple
    unknown_dim: int
    asts: tuple = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "asts", tuple(parse(s) for s in self.sources))
        if not 0 <= self.unknown_dim < len(self.sources):
            raise ConfigError("unknown_dim outside the state dimensions")

    @property
    def dim(self):
        return len(self.sources)

    def rhs(self, chi, f_value):
        """Known part evaluated at ``chi`` with ``f_value`` added in its slot."""
        vec = np.array([evaluate(a, chi) for a in self.asts], dtype=float)
        vec[self.unknown_dim] += f_value
        return vec


def chaos_dynamics(s=10.0, r=28.0):
    """The benchmark 3-D system: xdot = s(y-x), ydot = rx - y - xz,
    zdot = xy + f(chi), with the third component's extra term unknown."""
    return DynamicsSpec(
        sources=(f"{s!r}*(y - x)", f"{r!r}*x - y - x*z", "x*y"),
        unknown_dim=2,
    )


def chaos_rhs(chi, s, r, f_value):
    """Direct form of the benchmark system (oracle for the expression path)."""
    x, y, z = chi
    return np.array([s * (y - x), r * x - y - x * z, x * y + f_value])


def euler_step(chi, rhs, dt):
    """chi + dt * rhs; aborts on non-finite state."""
    if dt <= 0:
        raise ConfigError("dt must be positive")
    with np.errstate(over="ignore", invalid="ignore"):
        nxt = np.asarray(chi, dtype=float) + dt * np.asarray(rhs, dtype=float)
    if not np.isfinite(nxt).all():
        raise NumericError("state became non-finite after Euler step")
    return nxt


# ---------------------------------------------------------------------------
# Episode
# ---------------------------------------------------------------------------


@dataclass
class EpisodeConfig:
    dynamics: DynamicsSpec
    true_f: object               # callable chi -> float, the unknown component
    dt: float
    steps: int
    initial_state: np.ndarray
    method: Method
    noise_std: float
    seed: int
    election_rule: str = "discard"
    variance_weight_rule: str = "inverse"
    track_trajectories: bool = False
    audit: bool = False

    def __post_init__(self):
        if self.dt <= 0:
            raise ConfigError("dt must be positive")
        if self.steps < 1:
            raise ConfigError("steps must be >= 1")


@dataclass(frozen=True)
class AgentStep:
    agent_id: int
    value: float
    abs_error: float
    elected: tuple
    msgs: int
    var_calls: int
    weights: dict | None


@dataclass(frozen=True)
class StepTrace:
    step: int
    t: float
    state: tuple
    f_true: float
    agents: dict


@dataclass
class EpisodeResult:
    traces: list
    errors: np.ndarray             # (steps, S) |prediction - truth|
    agent_ids: tuple
    models: dict
    logs: dict                     # agent -> PriorErrorLog after the episode
    trajectories: dict | None      # agent -> (steps+1, dim) learned-copy path
    audit_rows: list


def neighborhood_trust(agent_id, neighborhood, eps):
    """Normalized trust over one neighborhood; None signals a cold start.

    Agents without any error history cannot be preferred: their score is
    pinned to the worst observed value before normalization.
    """
    values = {j: eps[j] for j in neighborhood}
    if all(v is None for v in values.values()):
        return None
    worst = max(v for v in values.values() if v is not None)
    values = {j: (worst if v is None else v) for j, v in values.items()}
    return normalize_neighborhood(values)


def _predict(method, agent_id, x, spec, models, graph, eps, cfg):
    neighborhood = graph.closed_neighborhood(agent_id)
    local = {j: models[j] for j in neighborhood}
    if method.name == "prigp":
        trust = neighborhood_trust(agent_id, neighborhood, eps)
        return aggregate.predict(
            method, agent_id, x, local, trust=trust, sbar=spec.sbar,
            sigma_h=spec.sigma_h, election_rule=cfg.election_rule,
            variance_weight_rule=cfg.variance_weight_rule)
    return aggregate.predict(method, agent_id, x, local)


def run_episode(graph, specs, cfg):
    """One synchronous episode; see the module docstring for the step order.

    Trace counters (msgs, var_calls) cover the prediction at the true state;
    the optional learned-trajectory pass re-runs the same aggregation along
    each agent's own integrated state and is reported separately.
    """
    if graph.size != len(specs):
        raise ConfigError("graph size does not match the number of agents")
    specs = {s.agent_id: s for s in specs}
    if sorted(specs) != list(graph.agents):
        raise ConfigError("agent ids must be exactly 1..S")
    models = {i: specs[i].build_model() for i in graph.agents}
    logs = {i: PriorErrorLog(i, keep_history=cfg.audit) for i in graph.agents}
    rng = rng_for(cfg.seed, STREAM_EPISODE)

    chi = np.asarray(cfg.initial_state, dtype=float).copy()
    if chi.size != cfg.dynamics.dim:
        raise ConfigError("initial state dimension does not match dynamics")

    own_state = None
    trajectories = None
    if cfg.track_trajectories:
        own_state = {i: chi.copy() for i in graph.agents}
        trajectories = {i: [chi.copy()] for i in graph.agents}

    traces = []
    audit_rows = []
    errors = np.empty((cfg.steps, graph.size))

    for k in range(cfg.steps):
        t = k * cfg.dt
        eps = {i: logs[i].accumulated() for i in graph.agents}
        f_true = float(cfg.true_f(chi))

        agents = {}
        for i in graph.agents:
            try:
                res = _predict(cfg.method, i, chi, specs[i], models, graph,
                               eps, cfg)
            except NumericError as exc:
                raise NumericError(f"step {k}, agent {i}: {exc}") from exc
            abs_err = abs(res.value - f_true)
            errors[k, i - 1] = abs_err
            weights = None
            if res.weights is not None:
                weights = {j: res.weights.weight(j) for j in res.queried}
            agents[i] = AgentStep(agent_id=i, value=res.value,
                                  abs_error=abs_err, elected=res.queried,
                                  msgs=res.messages, var_calls=res.var_evals,
                                  weights=weights)
        traces.append(StepTrace(step=k, t=t, state=tuple(chi), f_true=f_true,
                                agents=agents))

        if cfg.track_trajectories:
            for i in graph.agents:
                estimate = _predict(cfg.method, i, own_state[i], specs[i],
                                    models, graph, eps, cfg)
                own_state[i] = euler_step(
                    own_state[i], cfg.dynamics.rhs(own_state[i], estimate.value),
                    cfg.dt)
                trajectories[i].append(own_state[i].copy())

        try:
            chi_next = euler_step(chi, cfg.dynamics.rhs(chi, f_true), cfg.dt)
        except NumericError as exc:
            raise NumericError(f"step {k}: {exc}") from exc

        y = f_true + rng.normal(0.0, cfg.noise_std)
        for i in graph.agents:
            prior_value = float(specs[i].prior(chi))
            e = logs[i].record(prior_value, y, t=t, x=chi.copy())
            if cfg.audit:
                trust = neighborhood_trust(i, graph.closed_neighborhood(i), eps)
                audit_rows.append((k, t, i, e, eps[i],
                                   None if trust is None else trust[i]))
        chi = chi_next

    if trajectories is not None:
        trajectories = {i: np.array(path) for i, path in trajectories.items()}
    return EpisodeResult(traces=traces, errors=errors,
                         agent_ids=graph.agents, models=models, logs=logs,
                         trajectories=trajectories, audit_rows=audit_rows)


# ---------------------------------------------------------------------------
# Monte Carlo
# ---------------------------------------------------------------------------


@dataclass
class MonteCarloSummary:
    """Across-trial statistics of per-(step, agent) absolute errors."""

    mean_abs_error: np.ndarray     # (steps, S)
    std_abs_error: np.ndarray      # (steps, S), population std
    agent_ids: tuple
    trials: int
    base_seed: int
    results: list                  # per-trial EpisodeResult, trial order


def _worker_count():
    try:
        return max(1, int(os.environ.get("PRIGP_THREADS", "1")))
    except ValueError:
        return 1


def monte_carlo(run_trial, trials, base_seed, max_workers=None):
    """Run ``run_trial(seed)`` for seeds base, base+1, ... and reduce.

    Trials are independent; ``PRIGP_THREADS`` (or ``max_workers``) > 1 runs
    them in a process pool.  Results are reduced in trial order either way,
    so the summary is identical.
    """
    if trials < 1:
        raise ConfigError("trials must be >= 1")
    seeds = [trial_seed(base_seed, t) for t in range(trials)]
    workers = _worker_count() if max_workers is None else max_workers
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run_trial, seeds))
    else:
        results = [run_trial(s) for s in seeds]

    stacked = np.stack([r.errors for r in results])      # (trials, steps, S)
    return MonteCarloSummary(
        mean_abs_error=stacked.mean(axis=0),
        std_abs_error=stacked.std(axis=0, ddof=0),
        agent_ids=results[0].agent_ids,
        trials=trials,
        base_seed=base_seed,
        results=results,
    )
