"""Seeded random networks for tests, demos and benchmarks."""

from __future__ import annotations

import numpy as np

from .graph import DelayDistribution, NetworkTopology


def random_connected_topology(
    rng: np.random.Generator, node_count: int, edge_count: int
) -> NetworkTopology:
    """Connected multigraph: a random tree plus extra edges (loops and parallels allowed)."""
    if edge_count < node_count - 1:
        raise ValueError("need at least N - 1 edges for a connected network")
    pairs = []
    order = rng.permutation(node_count) + 1
    for i in range(1, node_count):
        a, b = int(order[i]), int(order[rng.integers(i)])
        pairs.append((a, b) if rng.random() < 0.5 else (b, a))
    for _ in range(edge_count - len(pairs)):
        pairs.append((int(rng.integers(1, node_count + 1)), int(rng.integers(1, node_count + 1))))
    pairs = [pairs[i] for i in rng.permutation(len(pairs))]
    return NetworkTopology.from_pairs(node_count, pairs)


def random_network(
    rng: np.random.Generator,
    nodes: tuple[int, int] = (2, 8),
    max_edges: int = 16,
    delay_range: tuple[float, float] = (0.0, 10.0),
) -> DelayDistribution:
    """Draw ``N`` in ``nodes``, ``L`` in ``[N, max_edges]`` and uniform delays."""
    n = int(rng.integers(nodes[0], nodes[1] + 1))
    l = int(rng.integers(n, max(n, max_edges) + 1))
    top = random_connected_topology(rng, n, l)
    return DelayDistribution(top, rng.uniform(*delay_range, size=l))


def corpus(seed: int = 0, size: int = 200, **kwargs) -> list[DelayDistribution]:
    """The reproducible list of ``size`` random networks for ``seed``."""
    rng = np.random.default_rng(seed)
    return [random_network(rng, **kwargs) for _ in range(size)]
