"""Undirected communication graph with self-loop-augmented adjacency.

Agent ids are 1-based throughout the package (configs, CSV output,
tie-breaking order).
"""

import numpy as np

from .exceptions import ConfigError


class CommGraph:
    """Validated adjacency plus materialized neighbor sets."""

    def __init__(self, adjacency):
        A = np.asarray(adjacency, dtype=int)
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise ConfigError("adjacency must be a square matrix")
        if not np.isin(A, (0, 1)).all():
            raise ConfigError("adjacency entries must be 0 or 1")
        if not (np.diag(A) == 1).all():
            raise ConfigError("adjacency needs unit diagonal (self-loops)")
        if not (A == A.T).all():
            raise ConfigError("adjacency must be symmetric")
        self.A = A
        self.size = A.shape[0]
        self._closed = {
            i + 1: tuple(int(j + 1) for j in np.flatnonzero(A[i]))
            for i in range(self.size)
        }

    @property
    def agents(self):
        """All agent ids, 1..S."""
        return tuple(range(1, self.size + 1))

    def neighbors(self, agent_id):
        """Neighbor ids of ``agent_id``, excluding itself."""
        return tuple(j for j in self._closed[agent_id] if j != agent_id)

    def closed_neighborhood(self, agent_id):
        """``agent_id`` plus its neighbors, ascending."""
        return self._closed[agent_id]


def build_graph(adjacency_rows):
    return CommGraph(adjacency_rows)
