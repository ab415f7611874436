#!/usr/bin/env python3
"""Benchmark the compiled kernel core against the pure-NumPy fallback.

Times the primitives that dominate the simulation loops (gram construction,
cross vectors, single-point posterior mean/variance) plus an end-to-end
episode of the identification benchmark under each backend.

Usage: python benchmarks/bench_backends.py [--points 100] [--repeat 2000]
"""

import argparse
import time
import timeit

import numpy as np

from prigp import Dataset, GpModel, KernelParams, backend, resolve_prior
from prigp.config import build, default_dyn_ident
from prigp.experiments import dyn_ident_trial


def time_primitives(name, n, m, repeat):
    rng = np.random.default_rng(42)
    X = rng.uniform(-5.0, 5.0, (n, m))
    x = rng.uniform(-5.0, 5.0, m)
    params = KernelParams(1.0, [1.0] * m, 0.1)
    prior = resolve_prior("prior.zero", m)
    rows = {}
    with backend.force(name):
        model = GpModel(params, prior, Dataset(X, rng.normal(size=n))).fit()
        impl = backend.get()
        sv, ls = params.signal_var, params.inv_lengthscales
        rows["gram"] = timeit.timeit(
            lambda: impl.ard_gram(X, sv, ls, 0.01), number=max(repeat // 20, 1)
        ) / max(repeat // 20, 1)
        rows["cross"] = timeit.timeit(
            lambda: impl.ard_cross(X, x, sv, ls), number=repeat) / repeat
        rows["mean"] = timeit.timeit(
            lambda: model.posterior_mean(x), number=repeat) / repeat
        rows["variance"] = timeit.timeit(
            lambda: model.posterior_variance(x), number=repeat) / repeat
    return rows


def time_episode(name):
    cfg = build(default_dyn_ident())
    from prigp.aggregate import Method
    with backend.force(name):
        start = time.perf_counter()
        dyn_ident_trial(cfg, Method("prigp", 0.5), seed=7)
        return time.perf_counter() - start


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--points", type=int, default=100,
                    help="training points per model")
    ap.add_argument("--dim", type=int, default=3)
    ap.add_argument("--repeat", type=int, default=2000)
    args = ap.parse_args()

    names = backend.available()
    print(f"backends: {names} (active default: {backend.active_name()})")
    print(f"N={args.points}, m={args.dim}, {args.repeat} reps\n")

    results = {name: time_primitives(name, args.points, args.dim, args.repeat)
               for name in names}
    ops = ["gram", "cross", "mean", "variance"]
    header = f"{'op':<10}" + "".join(f"{name:>12}" for name in names)
    if len(names) == 2:
        header += f"{'speedup':>10}"
    print(header)
    for op in ops:
        line = f"{op:<10}"
        for name in names:
            line += f"{results[name][op] * 1e6:>10.1f}us"
        if len(names) == 2:
            line += f"{results['py'][op] / results['c'][op]:>9.1f}x"
        print(line)

    print("\nend-to-end identification episode (150 steps, 8 agents, c=0.5):")
    episode = {name: time_episode(name) for name in names}
    for name in names:
        print(f"  {name:>3}: {episode[name]:.3f}s")
    if len(names) == 2:
        print(f"  speedup: {episode['py'] / episode['c']:.2f}x")


if __name__ == "__main__":
    main()
