"""Directed multigraphs with delayed links and their cycle space.

Nodes are numbered ``1..N`` and edges carry dense ids ``1..L``.  Parallel
edges and self-loops are allowed.  Everything that is ordered (edge lists,
cycle lists, tie-breaks) is ordered by edge id.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

__all__ = [
    "GraphError",
    "DisconnectedError",
    "NetworkTopology",
    "DelayDistribution",
    "TimeshiftVector",
    "Semicycle",
    "SpanningTree",
    "input_set",
    "output_set",
    "essential_delay_count",
    "fundamental_cycles",
    "delay_sum",
    "roundtrip",
]


class GraphError(ValueError):
    """Invalid topology, distribution or tree."""


class DisconnectedError(GraphError):
    """Raised when an operation needs a connected network."""

    def __init__(self, components: list[list[int]]):
        self.components = components
        parts = "; ".join("{" + ", ".join(map(str, c)) + "}" for c in components)
        super().__init__(f"network is disconnected, components: {parts}")


@dataclass(frozen=True)
class NetworkTopology:
    """Directed multigraph ``(N, E)`` with source/target maps.

    ``edges`` holds ``(edge_id, source, target)`` triples; ids must be
    exactly ``1..L`` (any input order, stored sorted).
    """

    node_count: int
    edges: tuple[tuple[int, int, int], ...]
    sources: np.ndarray = field(init=False, repr=False, compare=False)
    targets: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        n = int(self.node_count)
        if n < 1:
            raise GraphError(f"node_count must be positive, got {self.node_count}")
        edges = tuple(sorted((int(i), int(s), int(t)) for i, s, t in self.edges))
        ids = [e[0] for e in edges]
        if ids != list(range(1, len(edges) + 1)):
            raise GraphError(f"edge ids must be unique and dense 1..{len(edges)}, got {ids}")
        for i, s, t in edges:
            if not (1 <= s <= n and 1 <= t <= n):
                raise GraphError(f"edge {i}: endpoints ({s}, {t}) outside 1..{n}")
        object.__setattr__(self, "node_count", n)
        object.__setattr__(self, "edges", edges)
        src = np.array([s - 1 for _, s, _ in edges], dtype=np.intp)
        tgt = np.array([t - 1 for _, _, t in edges], dtype=np.intp)
        src.flags.writeable = False
        tgt.flags.writeable = False
        object.__setattr__(self, "sources", src)
        object.__setattr__(self, "targets", tgt)

    @classmethod
    def from_pairs(cls, node_count: int, pairs: Iterable[tuple[int, int]]) -> "NetworkTopology":
        """Build from ``(source, target)`` pairs; ids follow list order."""
        return cls(node_count, tuple((k, s, t) for k, (s, t) in enumerate(pairs, start=1)))

    @property
    def edge_count(self) -> int:
        return len(self.edges)

    @property
    def edge_ids(self) -> list[int]:
        return [e[0] for e in self.edges]

    def source(self, edge_id: int) -> int:
        return self.edges[self._index(edge_id)][1]

    def target(self, edge_id: int) -> int:
        return self.edges[self._index(edge_id)][2]

    def _index(self, edge_id: int) -> int:
        if not 1 <= edge_id <= len(self.edges):
            raise GraphError(f"unknown edge id {edge_id}")
        return edge_id - 1

    def incidence(self) -> np.ndarray:
        """``L x N`` matrix with +1 at the target and -1 at the source column.

        Self-loops give a zero row.
        """
        D = np.zeros((self.edge_count, self.node_count))
        rows = np.arange(self.edge_count)
        np.add.at(D, (rows, self.targets), 1.0)
        np.add.at(D, (rows, self.sources), -1.0)
        return D

    def components(self) -> list[list[int]]:
        """Connected components of the underlying undirected graph (1-based)."""
        adj: list[list[int]] = [[] for _ in range(self.node_count)]
        for _, s, t in self.edges:
            adj[s - 1].append(t - 1)
            adj[t - 1].append(s - 1)
        seen = [False] * self.node_count
        comps = []
        for root in range(self.node_count):
            if seen[root]:
                continue
            seen[root] = True
            comp, queue = [], deque([root])
            while queue:
                u = queue.popleft()
                comp.append(u + 1)
                for w in adj[u]:
                    if not seen[w]:
                        seen[w] = True
                        queue.append(w)
            comps.append(sorted(comp))
        return comps

    def is_connected(self) -> bool:
        return len(self.components()) == 1

    def require_connected(self) -> None:
        comps = self.components()
        if len(comps) > 1:
            raise DisconnectedError(comps)


def input_set(topology: NetworkTopology, node: int) -> list[int]:
    """Ids of the edges ending at ``node``."""
    _check_node(topology, node)
    return [i for i, _, t in topology.edges if t == node]


def output_set(topology: NetworkTopology, node: int) -> list[int]:
    """Ids of the edges leaving ``node``."""
    _check_node(topology, node)
    return [i for i, s, _ in topology.edges if s == node]


def _check_node(topology: NetworkTopology, node: int) -> None:
    if not 1 <= node <= topology.node_count:
        raise GraphError(f"node {node} outside 1..{topology.node_count}")


def essential_delay_count(topology: NetworkTopology) -> int:
    """Cycle-space dimension ``C = L - N + 1`` of a connected network."""
    topology.require_connected()
    return topology.edge_count - topology.node_count + 1


@dataclass(frozen=True)
class DelayDistribution:
    """Per-edge delays ``tau[k - 1]`` for edge id ``k``.

    Construction only checks shape and finiteness; negative entries are
    legal for intermediate distributions, see :meth:`is_nonnegative`.
    """

    topology: NetworkTopology
    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=float).reshape(-1)
        if v.shape != (self.topology.edge_count,):
            raise GraphError(
                f"expected {self.topology.edge_count} delays, got {v.size}"
            )
        if not np.all(np.isfinite(v)):
            bad = int(np.flatnonzero(~np.isfinite(v))[0]) + 1
            raise GraphError(f"edge {bad}: delay is not finite")
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    @classmethod
    def from_mapping(cls, topology: NetworkTopology, delays: dict[int, float]):
        missing = set(topology.edge_ids) - set(delays)
        extra = set(delays) - set(topology.edge_ids)
        if missing or extra:
            raise GraphError(
                f"delay map must cover exactly the edges; missing {sorted(missing)}, "
                f"unknown {sorted(extra)}"
            )
        return cls(topology, [delays[k] for k in topology.edge_ids])

    def __getitem__(self, edge_id: int) -> float:
        return float(self.values[self.topology._index(edge_id)])

    def __len__(self) -> int:
        return len(self.values)

    def as_dict(self) -> dict[int, float]:
        return {k: float(v) for k, v in zip(self.topology.edge_ids, self.values)}

    def is_nonnegative(self) -> bool:
        return bool(np.all(self.values >= 0.0))

    def require_nonnegative(self) -> None:
        neg = np.flatnonzero(self.values < 0.0)
        if neg.size:
            k = int(neg[0])
            raise GraphError(f"edge {k + 1}: negative delay {self.values[k]!r}")

    def node_lags(self) -> np.ndarray:
        """``r_j``: largest delay over the edges leaving node ``j`` (0 if none)."""
        r = np.zeros(self.topology.node_count)
        np.maximum.at(r, self.topology.sources, self.values)
        return r


@dataclass(frozen=True)
class TimeshiftVector:
    """Per-node clock shifts ``eta`` (``shifts[j - 1]`` for node ``j``)."""

    shifts: np.ndarray

    def __post_init__(self):
        s = np.array(self.shifts, dtype=float).reshape(-1)
        if not np.all(np.isfinite(s)):
            raise GraphError("timeshifts must be finite")
        s.flags.writeable = False
        object.__setattr__(self, "shifts", s)

    @classmethod
    def zeros(cls, node_count: int) -> "TimeshiftVector":
        return cls(np.zeros(node_count))

    def __len__(self) -> int:
        return len(self.shifts)

    @property
    def max_shift(self) -> float:
        return float(self.shifts.max()) if len(self.shifts) else 0.0

    def canonical(self) -> "TimeshiftVector":
        """Shift so that the smallest entry is exactly zero."""
        return TimeshiftVector(self.shifts - self.shifts.min())

    def is_canonical(self, atol: float = 0.0) -> bool:
        return bool(abs(self.shifts.min()) <= atol and np.all(self.shifts >= -atol))

    def reverse(self) -> "TimeshiftVector":
        """``max(eta) - eta``: the shifts that undo this one."""
        return TimeshiftVector(self.max_shift - self.shifts)


@dataclass(frozen=True)
class Semicycle:
    """Closed walk in the undirected graph.

    ``signs[j]`` is +1 when edge ``edges[j]`` is oriented like the first
    edge relative to the walk, -1 otherwise.  ``nodes`` is the visited node
    sequence (first node repeated at the end).
    """

    edges: tuple[int, ...]
    signs: tuple[int, ...]
    nodes: tuple[int, ...]

    @classmethod
    def from_edges(
        cls, topology: NetworkTopology, edge_ids: Sequence[int], start: int | None = None
    ) -> "Semicycle":
        """Trace ``edge_ids`` as a closed walk and derive the signs.

        The first edge is walked from ``start`` (default: its source, then
        its target if that fails).
        """
        if not edge_ids:
            raise GraphError("a semicycle needs at least one edge")
        first = edge_ids[0]
        starts = [start] if start is not None else [topology.source(first), topology.target(first)]
        for s0 in starts:
            walk = _trace(topology, edge_ids, s0)
            if walk is not None:
                nodes, along = walk
                signs = tuple(1 if a == along[0] else -1 for a in along)
                return cls(tuple(edge_ids), signs, tuple(nodes))
        raise GraphError(f"edges {list(edge_ids)} do not form a closed walk")

    def reversed(self) -> "Semicycle":
        """The same closed walk traversed the other way.

        Signs stay relative to the traversal, so every sign flips (the
        first edge is now walked against the traversal) and the delay sum
        changes sign.
        """
        return Semicycle(
            tuple(reversed(self.edges)),
            tuple(-s for s in reversed(self.signs)),
            tuple(reversed(self.nodes)),
        )

    def vector(self, topology: NetworkTopology) -> np.ndarray:
        """Signed edge-indicator vector of length L."""
        z = np.zeros(topology.edge_count)
        for e, s in zip(self.edges, self.signs):
            z[e - 1] += s
        return z


def _trace(topology, edge_ids, start):
    node = start
    nodes = [node]
    along = []
    for e in edge_ids:
        s, t = topology.source(e), topology.target(e)
        if node == s:
            along.append(True)
            node = t
        elif node == t:
            along.append(False)
            node = s
        else:
            return None
        nodes.append(node)
    if node != start:
        return None
    return nodes, along


@dataclass(frozen=True)
class SpanningTree:
    """Edge ids of a spanning tree, sorted."""

    edges: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "edges", tuple(sorted(int(e) for e in self.edges)))

    def __contains__(self, edge_id: int) -> bool:
        return edge_id in self.edges

    def __len__(self) -> int:
        return len(self.edges)

    def validate(self, topology: NetworkTopology) -> None:
        n = topology.node_count
        if len(set(self.edges)) != len(self.edges):
            raise GraphError("spanning tree lists an edge twice")
        if len(self.edges) != n - 1:
            raise GraphError(f"spanning tree needs {n - 1} edges, got {len(self.edges)}")
        parent = list(range(n))

        def find(a):
            while parent[a] != a:
                parent[a] = parent[parent[a]]
                a = parent[a]
            return a

        for e in self.edges:
            a, b = find(topology.source(e) - 1), find(topology.target(e) - 1)
            if a == b:
                raise GraphError(f"edge {e} closes a cycle inside the tree")
            parent[a] = b

    def cotree(self, topology: NetworkTopology) -> list[int]:
        inside = set(self.edges)
        return [k for k in topology.edge_ids if k not in inside]

    def path(self, topology: NetworkTopology, start: int, end: int) -> list[tuple[int, bool]]:
        """Tree path from ``start`` to ``end`` as ``(edge_id, walked_along)``."""
        adj: dict[int, list[tuple[int, int, bool]]] = {}
        for e in self.edges:
            s, t = topology.source(e), topology.target(e)
            adj.setdefault(s, []).append((e, t, True))
            adj.setdefault(t, []).append((e, s, False))
        prev: dict[int, tuple[int, int, bool] | None] = {start: None}
        queue = deque([start])
        while queue:
            u = queue.popleft()
            if u == end:
                break
            for e, w, fwd in sorted(adj.get(u, [])):
                if w not in prev:
                    prev[w] = (u, e, fwd)
                    queue.append(w)
        if end not in prev:
            raise GraphError(f"nodes {start} and {end} are not joined by the tree")
        out = []
        node = end
        while prev[node] is not None:
            u, e, fwd = prev[node]
            out.append((e, fwd))
            node = u
        return out[::-1]


def fundamental_cycles(topology: NetworkTopology, tree: SpanningTree) -> list[Semicycle]:
    """One semicycle per cotree edge, ordered by that edge's id.

    The walk enters the cotree edge ``l`` at its target, runs against ``l``
    to its source and returns through the tree.  With this orientation the
    delay sum equals the delay ``l`` keeps once every tree edge has been
    made instantaneous.
    """
    tree.validate(topology)
    cycles = []
    for e in tree.cotree(topology):
        s, t = topology.source(e), topology.target(e)
        path = tree.path(topology, s, t)
        edges = [e] + [p for p, _ in path]
        # first edge is walked backwards, so a tree edge matches it when it is too
        signs = [1] + [-1 if fwd else 1 for _, fwd in path]
        nodes = [t, s]
        node = s
        for p, fwd in path:
            node = topology.target(p) if fwd else topology.source(p)
            nodes.append(node)
        cycles.append(Semicycle(tuple(edges), tuple(signs), tuple(nodes)))
    return cycles


def delay_sum(cycle: Semicycle, tau: DelayDistribution) -> float:
    """Signed delay sum around ``cycle``."""
    v = tau.values
    return float(sum(s * v[e - 1] for e, s in zip(cycle.edges, cycle.signs)))


def roundtrip(cycle: Semicycle, tau: DelayDistribution) -> float:
    """Absolute delay sum of ``cycle``."""
    return abs(delay_sum(cycle, tau))


def cycle_matrix(topology: NetworkTopology, tree: SpanningTree) -> np.ndarray:
    """``C x L`` matrix whose rows are the fundamental cycle vectors."""
    cycles = fundamental_cycles(topology, tree)
    if not cycles:
        return np.zeros((0, topology.edge_count))
    return np.vstack([c.vector(topology) for c in cycles])
