"""Shared oracles and builders for the test suite.

The oracles here recount edges and energies from scratch in plain Python so
the incremental/vectorized paths in the package are checked against an
independent computation.
"""

import numpy as np
import pytest

from plantedclique import Graph


def py_edges_inside(dense, members) -> int:
    """Edge count of the induced subgraph, by double loop."""
    members = sorted(members)
    count = 0
    for a in range(len(members)):
        for b in range(a + 1, len(members)):
            if dense[members[a]][members[b]]:
                count += 1
    return count


def py_scaled_energy(dense, members, gamma) -> int:
    """q_den * H(U) recomputed from the definition."""
    s = len(set(members))
    e = py_edges_inside(dense, set(members))
    return gamma.p * (s * (s - 1) // 2) - (gamma.p + gamma.q_den) * e


def py_deg_into(dense, x, members) -> int:
    return sum(1 for v in set(members) if v != x and dense[x][v])


def graph_from_edges(n, edges) -> Graph:
    return Graph.from_edges(n, edges)


def random_dense(n, rng) -> np.ndarray:
    upper = np.triu(rng.random((n, n)) < 0.5, 1)
    return upper | upper.T


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
