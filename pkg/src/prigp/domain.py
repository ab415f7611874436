"""Axis-aligned compact domains (per-dimension bounds)."""

from dataclasses import dataclass

import numpy as np

from .exceptions import ConfigError


@dataclass(frozen=True)
class Box:
    """Compact box domain ``[lows_j, highs_j]`` per dimension."""

    lows: np.ndarray
    highs: np.ndarray

    def __post_init__(self):
        lows = np.atleast_1d(np.asarray(self.lows, dtype=float))
        highs = np.atleast_1d(np.asarray(self.highs, dtype=float))
        object.__setattr__(self, "lows", lows)
        object.__setattr__(self, "highs", highs)
        if lows.shape != highs.shape or lows.ndim != 1:
            raise ConfigError("domain bounds must be equal-length 1-D sequences")
        if not (np.isfinite(lows).all() and np.isfinite(highs).all()):
            raise ConfigError("domain bounds must be finite")
        if np.any(highs <= lows):
            raise ConfigError("every domain dimension needs high > low")

    @classmethod
    def from_pairs(cls, pairs):
        pairs = list(pairs)
        return cls(np.array([p[0] for p in pairs], dtype=float),
                   np.array([p[1] for p in pairs], dtype=float))

    @property
    def dim(self):
        return self.lows.size

    @property
    def widths(self):
        return self.highs - self.lows

    def contains(self, x):
        x = np.atleast_1d(np.asarray(x, dtype=float))
        return bool(np.all(x >= self.lows) and np.all(x <= self.highs))

    def sample(self, rng, n):
        """``n`` points uniform over the box, shape (n, dim)."""
        return rng.uniform(self.lows, self.highs, size=(n, self.dim))

    def grid(self, per_dim=50, cap=100_000):
        """Uniform grid, at most ``cap`` points (per-dim count reduced to fit)."""
        while per_dim > 2 and per_dim**self.dim > cap:
            per_dim -= 1
        axes = [np.linspace(lo, hi, per_dim) for lo, hi in zip(self.lows, self.highs)]
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=-1)
