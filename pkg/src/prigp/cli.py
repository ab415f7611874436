"""Command-line entry point.

Subcommands: ``func-approx`` (static approximation benchmark), ``dyn-ident``
(Monte Carlo identification benchmark), ``bounds-check`` (error-bound
coverage).  Each runs its default configuration unless ``--config`` points
at a JSON file; flags override individual fields.  Outputs are plot-ready
CSV files plus a JSON summary; same config + seed gives hash-identical
files.

Exit codes: 0 success, 2 configuration error, 3 numeric failure.
"""

import argparse
import os
import sys

from .aggregate import METHOD_NAMES
from .config import DEFAULTS, build, load_config
from .exceptions import ConfigError, NumericError, PrigpError
from .experiments import run_bounds_check, run_dyn_ident, run_func_approx
from .output import emit_csv, emit_json


def _add_common_flags(p):
    p.add_argument("--config", metavar="PATH",
                   help="JSON config; defaults are used when omitted")
    p.add_argument("--seed", type=int, metavar="U64", help="experiment seed")
    p.add_argument("--trials", type=int, metavar="N",
                   help="Monte Carlo trial count")
    p.add_argument("--methods", metavar="LIST",
                   help=f"comma-separated subset of {','.join(METHOD_NAMES)}")
    p.add_argument("--c", type=float, metavar="FLOAT", dest="c_value",
                   help="weight mixing exponent applied to prigp entries")
    p.add_argument("--out", metavar="DIR", help="output directory")
    p.add_argument("--audit", action="store_true", default=None,
                   help="retain and emit per-step error histories")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="prigp",
        description="Prior-aware elective distributed GP benchmarks")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
            ("func-approx", "static function-approximation benchmark"),
            ("dyn-ident", "dynamical-system identification benchmark"),
            ("bounds-check", "probabilistic error-bound coverage check")):
        _add_common_flags(sub.add_parser(name, help=help_text))
    return parser


def _apply_overrides(raw, args):
    if args.seed is not None:
        raw["seed"] = args.seed
    if args.trials is not None:
        raw["trials"] = args.trials
    if args.methods is not None:
        names = [n.strip() for n in args.methods.split(",") if n.strip()]
        if not names:
            raise ConfigError("--methods must name at least one method")
        c = args.c_value if args.c_value is not None else 1.0
        raw["methods"] = [{"name": n, "c": c} if n == "prigp" else n
                          for n in names]
    elif args.c_value is not None:
        raw["methods"] = [
            {"name": m["name"] if isinstance(m, dict) else m, "c": args.c_value}
            if (m == "prigp" or (isinstance(m, dict) and m["name"] == "prigp"))
            else m
            for m in raw.get("methods", [])
        ]
        if "bounds" in raw:
            raw["bounds"]["c"] = args.c_value
    if args.out is not None:
        raw.setdefault("output", {})["directory"] = args.out
    if args.audit:
        raw.setdefault("output", {})["audit"] = True
    return raw


def _load(args, experiment):
    if args.config:
        cfg = load_config(args.config)
        if cfg.experiment != experiment:
            raise ConfigError(f"config is for {cfg.experiment!r}, "
                              f"subcommand expects {experiment!r}")
        raw = cfg.raw
    else:
        raw = DEFAULTS[experiment]()
    return build(_apply_overrides(raw, args))


def _out_path(cfg, name):
    return os.path.join(cfg.output_dir, name)


def _write_config_echo(cfg):
    # the echo documents the experiment, not the destination: dropping the
    # output block keeps reruns into different directories hash-identical
    echo = {k: v for k, v in cfg.raw.items() if k != "output"}
    emit_json(_out_path(cfg, "config_used.json"), echo)


# ---------------------------------------------------------------------------
# func-approx
# ---------------------------------------------------------------------------


def _write_func_approx(cfg, result):
    ids = list(result.agent_ids)
    table_rows = []
    counter_rows = []
    for outcome in result.outcomes:
        table_rows.append([outcome.label]
                          + [outcome.per_agent_mean_error[i] for i in ids]
                          + [outcome.sum_error])
        for i in ids:
            counter_rows.append([
                outcome.label, i, outcome.messages_per_query[i],
                ";".join(str(j) for j in outcome.queried[i]),
                outcome.var_evals if outcome.method.needs_variance else 0,
            ])
    emit_csv(_out_path(cfg, "func_approx_table.csv"),
             ["method"] + [f"agent_{i}" for i in ids] + ["sum"], table_rows)
    emit_csv(_out_path(cfg, "func_approx_counters.csv"),
             ["method", "agent", "messages_per_query", "aggregated_set",
              "var_evals_total"], counter_rows)
    emit_json(_out_path(cfg, "func_approx_summary.json"), {
        "seed": result.seed,
        "test_points": len(result.f_true),
        "errors": {o.label: {str(i): o.per_agent_mean_error[i] for i in ids}
                   for o in result.outcomes},
        "sums": {o.label: o.sum_error for o in result.outcomes},
        "counters": {o.label: {"mean_evals": o.mean_evals,
                               "var_evals": o.var_evals}
                     for o in result.outcomes},
    })
    if cfg.audit:
        from .sim import neighborhood_trust
        eps_norm = {}
        for i in ids:
            trust = neighborhood_trust(i, cfg.graph.closed_neighborhood(i),
                                       result.setup.eps)
            eps_norm[i] = None if trust is None else trust[i]
        rows = []
        for i in ids:
            log = result.setup.logs[i]
            running_sum = 0.0
            for p, (t, x, e) in enumerate(log.history):
                running_sum += abs(e)
                rows.append([0, p, i, e, running_sum / (p + 1), eps_norm[i]])
        rows.sort(key=lambda r: (r[0], r[1], r[2]))
        emit_csv(_out_path(cfg, "func_approx_audit.csv"),
                 ["trial", "step", "agent", "e", "eps", "eps_norm"], rows)


def cmd_func_approx(args):
    cfg = _load(args, "func-approx")
    result = run_func_approx(cfg)
    _write_func_approx(cfg, result)
    _write_config_echo(cfg)
    for outcome in result.outcomes:
        print(f"{outcome.label:14s} sum mean |error| = {outcome.sum_error:.6f}")
    print(f"outputs in {cfg.output_dir}")
    return 0


# ---------------------------------------------------------------------------
# dyn-ident
# ---------------------------------------------------------------------------


def _write_dyn_ident(cfg, result):
    ids = list(result.agent_ids)
    summary_rows = []
    trace_rows = []
    trajectory_rows = []
    audit_rows = []
    for method in result.methods:
        label = method.label
        summary = result.summaries[label]
        for k in range(summary.mean_abs_error.shape[0]):
            for idx, i in enumerate(ids):
                summary_rows.append([
                    k, i, label,
                    summary.mean_abs_error[k, idx],
                    summary.std_abs_error[k, idx]])
        for trial, episode in enumerate(summary.results):
            for trace in episode.traces:
                for i in ids:
                    a = trace.agents[i]
                    trace_rows.append([
                        trial, trace.step, trace.t, i, label,
                        trace.f_true, a.value, a.abs_error,
                        ";".join(str(j) for j in a.elected),
                        a.msgs, a.var_calls])
            for step, t, agent, e, eps, eps_norm in episode.audit_rows:
                audit_rows.append([trial, step, agent, e, eps, eps_norm,
                                   label])
            if episode.trajectories is not None:
                true_path = [tr.state for tr in episode.traces]
                for k, state in enumerate(true_path):
                    trajectory_rows.append([label, trial, 0, k] + list(state))
                for i in ids:
                    path = episode.trajectories[i]
                    for k in range(path.shape[0]):
                        trajectory_rows.append(
                            [label, trial, i, k] + list(path[k]))

    emit_csv(_out_path(cfg, "dyn_ident_summary.csv"),
             ["step", "agent", "method", "mean_abs_error", "std_abs_error"],
             summary_rows)
    emit_csv(_out_path(cfg, "dyn_ident_traces.csv"),
             ["trial", "step", "t", "agent", "method", "f_true", "f_pred",
              "abs_error", "elected_set", "msgs", "var_calls"], trace_rows)
    if trajectory_rows:
        dim = cfg.domain.dim
        emit_csv(_out_path(cfg, "dyn_ident_trajectories.csv"),
                 ["method", "trial", "agent", "step"]
                 + [f"x{j + 1}" for j in range(dim)], trajectory_rows)
    if audit_rows:
        emit_csv(_out_path(cfg, "dyn_ident_audit.csv"),
                 ["trial", "step", "agent", "e", "eps", "eps_norm", "method"],
                 audit_rows)
    emit_json(_out_path(cfg, "dyn_ident_summary.json"), {
        "seed": result.seed,
        "trials": result.trials,
        "episode_mean_error": {
            label: float(summary.mean_abs_error.mean())
            for label, summary in result.summaries.items()},
    })


def cmd_dyn_ident(args):
    cfg = _load(args, "dyn-ident")
    result = run_dyn_ident(cfg)
    _write_dyn_ident(cfg, result)
    _write_config_echo(cfg)
    for label, summary in result.summaries.items():
        print(f"{label:14s} episode mean |error| = "
              f"{summary.mean_abs_error.mean():.6f}")
    print(f"outputs in {cfg.output_dir}")
    return 0


# ---------------------------------------------------------------------------
# bounds-check
# ---------------------------------------------------------------------------


def _write_bounds_check(cfg, result):
    dim = cfg.domain.dim
    point_cols = [f"x{j + 1}" for j in range(dim)]
    rows = []
    for report in result.agents:
        for p in range(result.test_points.shape[0]):
            x = result.test_points[p]
            rows.append(["single", report.agent_id] + list(x)
                        + [report.abs_error[p], report.eta[p],
                           bool(report.abs_error[p] > report.eta[p])])
        for p in range(result.test_points.shape[0]):
            x = result.test_points[p]
            rows.append(["aggregated", report.agent_id] + list(x)
                        + [report.abs_error_agg[p], report.eta_agg[p],
                           bool(report.abs_error_agg[p] > report.eta_agg[p])])
    emit_csv(_out_path(cfg, "bounds_points.csv"),
             ["kind", "agent"] + point_cols + ["abs_error", "eta", "violated"],
             rows)
    emit_json(_out_path(cfg, "bounds_summary.json"), {
        "seed": result.seed,
        "beta": result.beta,
        "delta": result.delta,
        "tau": result.tau,
        "c": result.c,
        "sigma_reading": result.sigma_reading,
        "lipschitz_f": result.lipschitz_f,
        "lipschitz_kernel": result.lipschitz_kernel,
        "agents": {
            str(r.agent_id): {
                "gamma": r.gamma,
                "l_sigma2": r.l_sigma2,
                "lipschitz_prior": r.lipschitz_prior,
                "violation_rate": r.violation_rate,
                "violation_rate_aggregated": r.violation_rate_agg,
                "elected": list(r.elected),
            } for r in result.agents},
        "overall": {
            "bound": result.overall.bound,
            "probability": result.overall.probability,
            "degenerate": result.overall.degenerate,
            "violation_rate": result.overall_violation_rate,
        },
    })


def cmd_bounds_check(args):
    cfg = _load(args, "bounds-check")
    result = run_bounds_check(cfg)
    _write_bounds_check(cfg, result)
    _write_config_echo(cfg)
    for report in result.agents:
        print(f"agent {report.agent_id}: violation rate "
              f"{report.violation_rate:.4f} (single), "
              f"{report.violation_rate_agg:.4f} (aggregated)")
    if result.overall.degenerate:
        print("warning: union bound consumed the whole confidence budget "
              f"(probability {result.overall.probability:.3f})")
    print(f"outputs in {cfg.output_dir}")
    return 0


# ---------------------------------------------------------------------------


_COMMANDS = {
    "func-approx": cmd_func_approx,
    "dyn-ident": cmd_dyn_ident,
    "bounds-check": cmd_bounds_check,
}


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (NumericError, PrigpError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
