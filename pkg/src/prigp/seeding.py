"""Deterministic random-stream fan-out.

A single 64-bit experiment seed splits into independent streams via
``SeedSequence([seed, stream_id])``; consumers use fixed stream ids so that
(config, seed) fully determines every output file.  Monte Carlo trial ``t``
runs with seed ``base_seed + t``.
"""

import numpy as np

STREAM_DATASET = 0        # training inputs and output noise
STREAM_TEST_POINTS = 1    # query points for static experiments
STREAM_EPISODE = 2        # per-step measurement noise in simulations
STREAM_INITIAL_STATE = 3  # Monte Carlo initial conditions


def rng_for(seed, stream_id):
    """Independent generator for (seed, stream_id)."""
    return np.random.default_rng(np.random.SeedSequence([int(seed), int(stream_id)]))


def trial_seed(base_seed, trial_index):
    return int(base_seed) + int(trial_index)
