"""Componentwise timeshifts and delay reduction on a spanning tree."""

from __future__ import annotations

import logging
from collections import deque
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linprog

from ._refute import refute
from .graph import (
    DelayDistribution,
    GraphError,
    NetworkTopology,
    SpanningTree,
    TimeshiftVector,
    cycle_matrix,
    delay_sum,
    essential_delay_count,
    fundamental_cycles,
)

__all__ = [
    "INSTANTANEOUS_TOL",
    "ReductionError",
    "ReductionResult",
    "ReducibilityCertificate",
    "SearchOutcome",
    "apply_timeshift",
    "ct_relatable",
    "reduce_to_spanning_tree",
    "greedy_spanning_tree",
    "reducibility_search",
    "search_reducibility",
    "count_distinct_delays",
    "distinct_delay_values",
]

log = logging.getLogger(__name__)

INSTANTANEOUS_TOL = 1e-12


class ReductionError(GraphError):
    """Reduction request that cannot be served (e.g. too large to enumerate)."""


def apply_timeshift(tau: DelayDistribution, eta: TimeshiftVector) -> DelayDistribution:
    """Delays seen after shifting node clocks: ``tau - eta[t] + eta[s]``."""
    top = tau.topology
    if len(eta) != top.node_count:
        raise GraphError(f"timeshift has {len(eta)} entries, network has {top.node_count} nodes")
    e = eta.shifts
    return DelayDistribution(top, tau.values - e[top.targets] + e[top.sources])


def _tree_potential(topology: NetworkTopology, tree: SpanningTree, tau: DelayDistribution):
    """Node potentials ``p`` with ``tau(e) = p[t] - p[s]`` on tree edges, ``p[0] = 0``."""
    n = topology.node_count
    adj: list[list[tuple[int, int, float]]] = [[] for _ in range(n)]
    for e in tree.edges:
        s, t = topology.source(e) - 1, topology.target(e) - 1
        d = tau[e]
        adj[s].append((t, e, d))
        adj[t].append((s, e, -d))
    p = np.full(n, np.nan)
    p[0] = 0.0
    queue = deque([0])
    while queue:
        u = queue.popleft()
        for w, _, d in adj[u]:
            if np.isnan(p[w]):
                p[w] = p[u] + d
                queue.append(w)
    return p


def ct_relatable(
    tau1: DelayDistribution,
    tau2: DelayDistribution,
    topology: NetworkTopology | None = None,
    tol: float = 1e-9,
) -> tuple[bool, TimeshiftVector | None]:
    """Decide whether two distributions differ by a componentwise timeshift.

    Returns ``(True, eta)`` with ``tau2 == apply_timeshift(tau1, eta)`` and
    ``eta`` canonical, or ``(False, None)``.  Cycle sums are compared with
    tolerance ``tol * max(1, |sum|)``.
    """
    topology = topology or tau1.topology
    if tau1.topology != topology or tau2.topology != topology:
        raise GraphError("distributions live on different topologies")
    topology.require_connected()
    tree = greedy_spanning_tree(topology, tau1)
    for c in fundamental_cycles(topology, tree):
        a, b = delay_sum(c, tau1), delay_sum(c, tau2)
        if abs(a - b) > tol * max(1.0, abs(a), abs(b)):
            return False, None
    xi = _tree_potential(topology, tree, tau1)
    chi = _tree_potential(topology, tree, tau2)
    return True, TimeshiftVector(xi - chi).canonical()


def greedy_spanning_tree(
    topology: NetworkTopology,
    tau: DelayDistribution,
    forced: tuple[int, ...] = (),
) -> SpanningTree:
    """Kruskal tree by ``(delay, edge id)``; ``forced`` edges are taken first."""
    parent = list(range(topology.node_count))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    forced_set = set(forced)
    order = sorted(forced) + sorted(
        (k for k in topology.edge_ids if k not in forced_set), key=lambda k: (tau[k], k)
    )
    chosen = []
    for k in order:
        a, b = find(topology.source(k) - 1), find(topology.target(k) - 1)
        if a != b:
            parent[a] = b
            chosen.append(k)
            if len(chosen) == topology.node_count - 1:
                break
    if len(chosen) != topology.node_count - 1:
        topology.require_connected()
    return SpanningTree(tuple(chosen))


def _far_side(topology: NetworkTopology, tree: SpanningTree, cut_edge: int) -> np.ndarray:
    """Boolean mask of the tree component holding the target of ``cut_edge``."""
    n = topology.node_count
    adj: list[list[int]] = [[] for _ in range(n)]
    for e in tree.edges:
        if e == cut_edge:
            continue
        s, t = topology.source(e) - 1, topology.target(e) - 1
        adj[s].append(t)
        adj[t].append(s)
    mask = np.zeros(n, dtype=bool)
    root = topology.target(cut_edge) - 1
    mask[root] = True
    queue = deque([root])
    while queue:
        u = queue.popleft()
        for w in adj[u]:
            if not mask[w]:
                mask[w] = True
                queue.append(w)
    return mask


def _clusters(values, tol):
    vals = sorted(float(v) for v in values if v > INSTANTANEOUS_TOL)
    groups: list[list[float]] = []
    for v in vals:
        if groups and abs(v - groups[-1][-1]) <= tol * max(1.0, abs(v), abs(groups[-1][-1])):
            groups[-1].append(v)
        else:
            groups.append([v])
    return groups


def count_distinct_delays(tau, tol: float = 1e-9) -> int:
    """Number of distinct strictly positive delays (relative tolerance ``tol``).

    Values closer than ``tol * max(1, |a|, |b|)`` to a sorted neighbour
    share a class.  ``tau`` may be a distribution or a plain sequence.
    """
    if tol < 0:
        raise ValueError("tol must be nonnegative")
    values = tau.values if isinstance(tau, DelayDistribution) else np.asarray(tau, float)
    return len(_clusters(values, tol))


def distinct_delay_values(values, tol: float = 1e-9) -> list[float]:
    """Smallest representative of every class counted by :func:`count_distinct_delays`."""
    return [g[0] for g in _clusters(values, tol)]


@dataclass(frozen=True)
class ReductionResult:
    tree: SpanningTree
    timeshifts: TimeshiftVector
    reduced: DelayDistribution
    distinct_nonzero_delays: list[float]
    stages: list[DelayDistribution] = field(default_factory=list, repr=False)

    @property
    def essential_count(self) -> int:
        return essential_delay_count(self.reduced.topology)

    def to_json(self) -> dict:
        top = self.reduced.topology
        return {
            "tree_edges": list(self.tree.edges),
            "eta": [float(x) for x in self.timeshifts.shifts],
            "reduced_delays": [
                {"id": k, "delay": float(v)} for k, v in zip(top.edge_ids, self.reduced.values)
            ],
            "distinct_delays": list(self.distinct_nonzero_delays),
            "essential_count": self.essential_count,
        }


def reduce_to_spanning_tree(
    tau: DelayDistribution, topology: NetworkTopology | None = None
) -> ReductionResult:
    """Shift node clocks until a spanning tree carries only zero delays.

    Each stage takes the smallest positive delay on the current greedy tree,
    cuts the tree at that edge and advances every node on the target side
    by that delay.  The edge becomes instantaneous, edges into the advanced
    side lose the same amount and edges out of it gain it.  Because the
    tree is a minimum spanning tree, no delay crosses zero.  The tree is
    rebuilt around the instantaneous edges and the loop ends after at most
    ``N - 1`` stages with every tree edge at zero.
    """
    topology = topology or tau.topology
    if tau.topology != topology:
        raise GraphError("distribution belongs to a different topology")
    topology.require_connected()
    tau.require_nonnegative()

    src, tgt = topology.sources, topology.targets
    cur = tau.values.copy()
    eta = np.zeros(topology.node_count)
    stages = [tau]
    tree = greedy_spanning_tree(topology, tau)
    for _ in range(topology.node_count):
        positive = [e for e in tree.edges if cur[e - 1] > INSTANTANEOUS_TOL]
        if not positive:
            break
        star = min(positive, key=lambda e: (cur[e - 1], e))
        d = cur[star - 1]
        far = _far_side(topology, tree, star)
        eta[far] += d
        into = far[tgt] & ~far[src]
        out = far[src] & ~far[tgt]
        cur[into] -= d
        cur[out] += d
        cur[star - 1] = 0.0
        if np.any(cur < 0.0):
            raise ReductionError("stage produced a negative delay")
        dist = DelayDistribution(topology, cur)
        stages.append(dist)
        log.debug("stage %d: edge %d shifted by %g", len(stages) - 1, star, d)
        zero_tree = tuple(e for e in tree.edges if cur[e - 1] <= INSTANTANEOUS_TOL)
        tree = greedy_spanning_tree(topology, dist, forced=zero_tree)
    else:
        raise ReductionError("reduction did not terminate within N - 1 stages")

    cur[[e - 1 for e in tree.edges]] = 0.0
    reduced = DelayDistribution(topology, cur)
    eta_vec = TimeshiftVector(eta).canonical()
    cotree = [cur[e - 1] for e in tree.cotree(topology)]
    return ReductionResult(tree, eta_vec, reduced, distinct_delay_values(cotree), stages)


@dataclass(frozen=True)
class ReducibilityCertificate:
    """Solution of ``eta[t] - eta[s] + theta[q(l)] = tau(l)`` for every edge."""

    assignment: dict[int, int]
    values: list[float]
    timeshifts: TimeshiftVector
    residual: float

    def to_json(self) -> dict:
        return {
            "feasible": True,
            "assignment": [{"id": k, "label": q} for k, q in sorted(self.assignment.items())],
            "theta": list(self.values),
            "eta": [float(x) for x in self.timeshifts.shifts],
            "residual": self.residual,
        }


@dataclass(frozen=True)
class SearchOutcome:
    """Result of :func:`search_reducibility`.

    ``min_residual`` is a lower bound on the sup-norm distance from the
    input to any distribution that reduces to ``m`` values (``inf`` when
    nothing was rejected on residual grounds).  ``nodes`` counts visited
    search nodes.  ``complete`` is false when a node budget stopped the
    search first; ``min_residual`` then only covers the explored part.
    """

    certificate: ReducibilityCertificate | None
    min_residual: float
    nodes: int
    complete: bool = True

    @property
    def feasible(self) -> bool:
        return self.certificate is not None

    def to_json(self) -> dict:
        if self.certificate is not None:
            return self.certificate.to_json()
        out = {"feasible": False, "min_residual": self.min_residual}
        if not self.complete:
            out["complete"] = False
        return out


class _Search:
    """Depth-first search over label assignments with forward checking.

    The rows already fixed are kept in Gram-Schmidt form: orthonormal ``Q``
    spanning them, ``M`` with ``Q = M @ B`` and a particular solution ``v``
    that satisfies them exactly.  A candidate row ``g`` lying in their span
    is ``g = c @ B`` with ``c = (g @ Q.T) @ M``; any completion that keeps
    every residual below ``eps`` must have
    ``|tau - g @ v| <= eps * (1 + ||c||_1)``, which gives a certified
    lower bound used to discard the candidate.
    """

    DEP_TOL = 1e-9

    def __init__(self, topology, tau, m, tol):
        self.N = topology.node_count
        self.L = topology.edge_count
        self.m = m
        self.tol = tol
        self.tau = tau.values
        self.n = self.N - 1 + m
        D = np.zeros((self.L, self.n))
        for l, (_, s, t) in enumerate(topology.edges):
            if t > 1:
                D[l, t - 2] += 1.0
            if s > 1:
                D[l, s - 2] -= 1.0
        self.D = D
        self.src = topology.sources
        self.tgt = topology.targets
        self.nodes = 0
        self.best = np.inf

    def row(self, l, k):
        r = self.D[l].copy()
        if k:
            r[self.N - 2 + k] += 1.0
        return r

    def options(self, free, used, Q, M, v):
        """Admissible ``(label, new_unit_vector_or_None)`` per free edge."""
        opts = {l: [] for l in free}
        cuts = {l: [] for l in free}
        fi = np.asarray(free)
        rank = Q.shape[0]
        for k in range(used + 1):
            G = self.D[fi].copy()
            if k:
                G[:, self.N - 2 + k] += 1.0
            if rank:
                GQ = G @ Q.T
                W = G - GQ @ Q
                c1 = np.abs(GQ @ M).sum(axis=1)
            else:
                W = G
                c1 = np.zeros(len(fi))
            nr = np.linalg.norm(W, axis=1)
            signed = self.tau[fi] - G @ v
            defect = np.abs(signed)
            if k == 0:
                # a pinned negative shifted delay rules out every label
                negative = (nr <= self.DEP_TOL) & (signed + self.tol * (1.0 + c1) < 0.0)
                defect_zero = -signed / (1.0 + c1)
            for i, l in enumerate(free):
                if negative[i]:
                    continue
                if nr[i] > self.DEP_TOL:
                    opts[l].append((k, W[i] / nr[i], nr[i]))
                else:
                    bound = defect[i] / (1.0 + c1[i])
                    if bound <= self.tol:
                        opts[l].append((k, None, 0.0))
                    else:
                        cuts[l].append(bound)
        for i in np.flatnonzero(negative):
            cuts[free[i]].append(defect_zero[i])
        if used < self.m:
            k = used + 1
            for l in free:
                if negative[free.index(l)]:
                    continue
                g = self.row(l, k)
                w = g - (g @ Q.T) @ Q if rank else g
                nr = np.linalg.norm(w)
                opts[l].append((k, w / nr, nr))
        return opts, cuts

    def extend(self, l, k, unit, nr, Q, M, v):
        if unit is None:
            return Q, M, v
        g = self.row(l, k)
        r = Q.shape[0]
        newM = np.zeros((r + 1, r + 1))
        newM[:r, :r] = M
        if r:
            newM[r, :r] = -((g @ Q.T) @ M) / nr
        newM[r, r] = 1.0 / nr
        v2 = v + (self.tau[l] - g @ v) * unit / nr
        return np.vstack([Q, unit]), newM, v2

    def leaf(self, q):
        G = np.zeros((self.L, self.n))
        for l in range(self.L):
            G[l] = self.row(l, q[l])
        sol = np.linalg.lstsq(G, self.tau, rcond=None)[0]
        sol += np.linalg.lstsq(G, self.tau - G @ sol, rcond=None)[0]
        used = max(q) if q else 0
        # read theta back off the shifted delays so that exact data stays exact
        eta = np.concatenate([[0.0], sol[: self.N - 1]])
        shifted = self.tau - eta[self.tgt] + eta[self.src]
        labels = np.asarray(q)
        theta = np.array([shifted[labels == k].mean() for k in range(1, used + 1)])
        sol[self.N - 1 : self.N - 1 + used] = theta
        res = float(np.max(np.abs(G @ sol - self.tau))) if self.L else 0.0
        if res > self.tol:
            self.best = min(self.best, res)
            return None
        if np.any(theta <= 0.0):
            return None
        ts = np.sort(theta)
        if ts.size > 1 and np.min(np.diff(ts)) <= 1e-9:
            return None
        return ReducibilityCertificate(
            {l + 1: int(q[l]) for l in range(self.L)},
            [float(x) for x in theta],
            TimeshiftVector(eta).canonical(),
            res,
        )

    def theta_cut(self, used, Q, M, v):
        """Residual bound when the fixed rows already force a bad ``theta``.

        A ``theta`` (or a difference of two) lying in the row space equals
        its value under ``v`` up to ``eps * ||c||_1`` for any completion with
        residual ``eps``.  Returns ``None`` when nothing is forced.
        """
        if not used or not Q.shape[0]:
            return None
        base = self.N - 1
        cols = Q[:, base : base + used]
        pinned = np.abs(1.0 - (cols * cols).sum(axis=0)) < 1e-9
        for k in np.flatnonzero(pinned):
            c1 = np.abs(cols[:, k] @ M).sum()
            if v[base + k] + self.tol * c1 <= 0.0:
                return -v[base + k] / c1 if c1 > 0 else np.inf
        for i in range(used):
            for j in range(i + 1, used):
                d = cols[:, i] - cols[:, j]
                if abs(2.0 - d @ d) < 1e-9:
                    c1 = np.abs(d @ M).sum()
                    if abs(v[base + i] - v[base + j]) + self.tol * c1 <= 1e-9:
                        return self.tol
        return None

    def start(self):
        return [-1] * self.L, 0, np.zeros((0, self.n)), np.zeros((0, 0)), np.zeros(self.n)

    def any_feasible(self, q, used, Q, M, v):
        """Most-constrained-edge-first search; decides feasibility."""
        self.nodes += 1
        free = [l for l in range(self.L) if q[l] < 0]
        if not free:
            return self.leaf(q)
        cut = self.theta_cut(used, Q, M, v)
        if cut is not None:
            self.best = min(self.best, cut)
            return None
        opts, cuts = self.options(free, used, Q, M, v)
        dead = [l for l in free if not opts[l]]
        if dead:
            self.best = min(self.best, max(min(cuts[l]) for l in dead))
            return None
        l = min(free, key=lambda e: (len(opts[e]), e))
        for b in cuts[l]:
            self.best = min(self.best, b)
        for k, unit, nr in opts[l]:
            q[l] = k
            cert = self.any_feasible(q, max(used, k), *self.extend(l, k, unit, nr, Q, M, v))
            q[l] = -1
            if cert is not None:
                return cert
        return None

    def lp_bound(self, q):
        """Smallest max-abs residual any completion of ``q`` can reach.

        Linear relaxation: fixed rows within ``eps``, every free edge keeps
        a shifted delay of at least ``-eps``, all ``theta >= 0``.
        """
        n = self.n
        A, b = [], []
        for l in range(self.L):
            if q[l] >= 0:
                g = self.row(l, q[l])
                A += [np.r_[g, -1.0], np.r_[-g, -1.0]]
                b += [self.tau[l], -self.tau[l]]
            else:
                A.append(np.r_[self.D[l], -1.0])
                b.append(self.tau[l])
        cost = np.zeros(n + 1)
        cost[-1] = 1.0
        bounds = [(None, None)] * (self.N - 1) + [(0, None)] * (self.m + 1)
        res = linprog(cost, A_ub=np.array(A), b_ub=np.array(b), bounds=bounds, method="highs")
        return float(res.fun) if res.status == 0 else 0.0

    def first_in_order(self, q, used, Q, M, v, depth=0):
        """Edge-id order search; returns the lexicographically smallest solution."""
        self.nodes += 1
        if depth == self.L:
            return self.leaf(q)
        if self.theta_cut(used, Q, M, v) is not None:
            return None
        if depth:
            bound = self.lp_bound(q)
            if bound > self.tol:
                self.best = min(self.best, bound)
                return None
        free = list(range(depth, self.L))
        opts, _ = self.options(free, used, Q, M, v)
        if any(not opts[l] for l in free):
            return None
        for k, unit, nr in sorted(opts[depth], key=lambda o: o[0]):
            q[depth] = k
            cert = self.first_in_order(
                q, max(used, k), *self.extend(depth, k, unit, nr, Q, M, v), depth=depth + 1
            )
            q[depth] = -1
            if cert is not None:
                return cert
        return None


def search_reducibility(
    tau: DelayDistribution,
    topology: NetworkTopology | None = None,
    m: int = 1,
    tol: float = 1e-9,
    guard: int = 14,
    resolution: float = 1e-6,
    max_nodes: int | None = None,
) -> SearchOutcome:
    """Look for a timeshift leaving at most ``m`` distinct nonzero delays.

    Every edge gets a label ``q(l)`` in ``0..m`` (label 0 means zero delay,
    labels canonical by first use in edge-id order) and the linear system
    ``eta[t] - eta[s] + theta[q(l)] = tau(l)`` is solved with ``eta[1]``
    pinned.  An assignment is accepted when its least-squares residual is
    at most ``tol`` and the used ``theta`` are positive and pairwise
    distinct.  The returned certificate is the lexicographically smallest
    accepted assignment.  The search is exhaustive, so its cost grows
    exponentially with the edge count; ``guard`` caps ``L``.

    On failure ``min_residual`` is a certified lower bound on the sup-norm
    distance from ``tau`` to the nearest delay distribution that does reduce
    to ``m`` values.  Branches are only discarded once their bound exceeds
    ``max(tol, resolution)``, so the reported bound is sharp up to there.
    ``max_nodes`` caps the refutation phase; hitting it gives an
    incomplete outcome.
    """
    topology = topology or tau.topology
    if tau.topology != topology:
        raise GraphError("distribution belongs to a different topology")
    if m < 0:
        raise ValueError("m must be nonnegative")
    if tol <= 0:
        raise ValueError("tol must be positive")
    if topology.edge_count > guard:
        raise ReductionError(
            f"reducibility search enumerates label assignments and is limited to "
            f"{guard} edges (network has {topology.edge_count}); "
            f"use reduce_to_spanning_tree for a reduction to C distinct delays"
        )
    topology.require_connected()
    s = _Search(topology, tau, m, tol)
    # the staged reduction already exhibits a solution when it leaves <= m values
    known = tau.is_nonnegative() and (
        len(reduce_to_spanning_tree(tau).distinct_nonzero_delays) <= m
    )
    if not known:
        status, bound, nodes, _ = refute(
            s.D, s.tau, s.N, m, tol, max(tol, resolution), s.src.astype(np.int64), s.tgt.astype(np.int64),
            2**62 if max_nodes is None else int(max_nodes),
        )
        s.nodes += int(nodes)
        s.best = min(s.best, float(bound))
        if status != 1:
            return SearchOutcome(None, float(s.best), s.nodes, complete=status == 0)
    best = s.first_in_order(*s.start())
    return SearchOutcome(best, float(s.best), s.nodes)


def reducibility_search(
    tau: DelayDistribution,
    topology: NetworkTopology | None = None,
    m: int = 1,
    tol: float = 1e-9,
    guard: int = 14,
) -> ReducibilityCertificate | None:
    """Certificate from :func:`search_reducibility`, or ``None`` if infeasible."""
    return search_reducibility(tau, topology, m, tol, guard, resolution=tol).certificate


def cycle_sums(tau: DelayDistribution, tree: SpanningTree) -> np.ndarray:
    """Delay sums of the fundamental cycles of ``tree``."""
    return cycle_matrix(tau.topology, tree) @ tau.values
