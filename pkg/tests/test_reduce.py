import itertools

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from delaynet import (
    DelayDistribution,
    NetworkTopology,
    ReductionError,
    TimeshiftVector,
    apply_timeshift,
    count_distinct_delays,
    ct_relatable,
    delay_sum,
    essential_delay_count,
    fundamental_cycles,
    reduce_to_spanning_tree,
    reducibility_search,
    search_reducibility,
)
from delaynet.generators import random_connected_topology

from conftest import networks


# --- timeshifts -----------------------------------------------------------------


def test_apply_timeshift_ring(ring3):
    out = apply_timeshift(ring3, TimeshiftVector([0.0, 2.0, 5.0]))
    assert list(out.values) == [0.0, 0.0, 9.0]


def test_zero_shift_is_identity(ring3):
    assert list(apply_timeshift(ring3, TimeshiftVector.zeros(3)).values) == [2.0, 3.0, 4.0]


def test_self_loop_unaffected_by_shift():
    top = NetworkTopology.from_pairs(2, [(1, 2), (2, 2)])
    tau = DelayDistribution(top, [1.0, 4.0])
    assert apply_timeshift(tau, TimeshiftVector([0.0, 7.5]))[2] == 4.0


# --- relatability ----------------------------------------------------------------


def test_relatable_ring_with_witness(ring3):
    ok, eta = ct_relatable(ring3, DelayDistribution(ring3.topology, [0.0, 0.0, 9.0]))
    assert ok
    assert list(eta.shifts) == [0.0, 2.0, 5.0]


def test_not_relatable_when_roundtrip_differs(ring3):
    ok, eta = ct_relatable(ring3, DelayDistribution(ring3.topology, [0.0, 0.0, 8.0]))
    assert not ok and eta is None


def test_relatable_to_itself(ring3):
    ok, eta = ct_relatable(ring3, ring3)
    assert ok and list(eta.shifts) == [0.0, 0.0, 0.0]


@given(networks(max_nodes=7, max_edges=14), st.integers(0, 2**31))
def test_relatable_is_an_equivalence_relation(tau, seed):
    top = tau.topology
    rng = np.random.default_rng(seed)
    b = apply_timeshift(tau, TimeshiftVector(rng.uniform(0, 1, top.node_count)))
    c = apply_timeshift(b, TimeshiftVector(rng.uniform(0, 1, top.node_count)))
    assert ct_relatable(tau, tau)[0]
    assert ct_relatable(tau, b)[0] and ct_relatable(b, tau)[0]
    assert ct_relatable(b, c)[0] and ct_relatable(tau, c)[0]
    if top.edge_count >= top.node_count:
        # a random distribution almost surely has different roundtrips
        other = DelayDistribution(top, rng.uniform(0, 10, top.edge_count))
        assert ct_relatable(tau, other)[0] == ct_relatable(other, tau)[0] is False


@given(networks(max_nodes=7, max_edges=14), st.integers(0, 2**31))
def test_witness_reproduces_target(tau, seed):
    rng = np.random.default_rng(seed)
    b = apply_timeshift(tau, TimeshiftVector(rng.uniform(0, 3, tau.topology.node_count)))
    ok, eta = ct_relatable(tau, b)
    assert ok
    assert np.allclose(apply_timeshift(tau, eta).values, b.values, atol=1e-9)


@given(networks(), st.integers(0, 2**31))
def test_roundtrips_survive_any_shift(tau, seed):
    top = tau.topology
    eta = TimeshiftVector(np.random.default_rng(seed).uniform(0, 10, top.node_count))
    shifted = apply_timeshift(tau, eta)
    tree = reduce_to_spanning_tree(tau).tree
    for c in fundamental_cycles(top, tree):
        assert abs(delay_sum(c, shifted) - delay_sum(c, tau)) <= 1e-12 * len(c.edges) * 20


# --- staged reduction ------------------------------------------------------------


def test_reduce_pair(pair):
    r = reduce_to_spanning_tree(pair)
    assert r.tree.edges == (1,)
    assert list(r.timeshifts.shifts) == [0.0, 2.0]
    assert list(r.reduced.values) == [0.0, 5.0]
    assert r.distinct_nonzero_delays == [5.0]


def test_reduce_ring(ring3):
    r = reduce_to_spanning_tree(ring3)
    assert list(r.reduced.values) == [0.0, 0.0, 9.0]
    assert list(r.timeshifts.shifts) == [0.0, 2.0, 5.0]
    assert r.essential_count == 1
    assert r.to_json()["distinct_delays"] == [9.0]


def test_reduce_tree_removes_everything():
    top = NetworkTopology.from_pairs(4, [(1, 2), (3, 2), (3, 4)])
    r = reduce_to_spanning_tree(DelayDistribution(top, [1.5, 0.5, 2.0]))
    assert r.tree.edges == (1, 2, 3)
    assert list(r.reduced.values) == [0.0, 0.0, 0.0]
    assert r.distinct_nonzero_delays == []


def test_reduce_rejects_negative_delays(ring3):
    with pytest.raises(Exception, match="edge 1"):
        reduce_to_spanning_tree(DelayDistribution(ring3.topology, [-1.0, 1.0, 1.0]))


@given(networks())
def test_reduction_invariants(tau):
    top = tau.topology
    r = reduce_to_spanning_tree(tau)
    r.tree.validate(top)
    tilde = r.reduced.values
    assert all(abs(tilde[e - 1]) <= 1e-12 for e in r.tree.edges)
    assert np.all(tilde >= 0)
    assert len(r.distinct_nonzero_delays) <= essential_delay_count(top)
    assert r.timeshifts.is_canonical()
    assert ct_relatable(tau, r.reduced)[0]
    assert len(r.stages) - 1 <= top.node_count - 1
    assert all(s.is_nonnegative() for s in r.stages)
    # the reduced delays are the timeshift applied to the input
    assert np.allclose(apply_timeshift(tau, r.timeshifts).values, tilde, atol=1e-9)


@given(networks())
def test_cotree_delays_are_roundtrips(tau):
    r = reduce_to_spanning_tree(tau)
    for c in fundamental_cycles(tau.topology, r.tree):
        assert abs(r.reduced[c.edges[0]] - abs(delay_sum(c, tau))) <= 1e-12 * 100


@given(networks())
def test_reduction_is_idempotent(tau):
    r = reduce_to_spanning_tree(tau)
    again = reduce_to_spanning_tree(r.reduced)
    assert again.tree == r.tree
    assert np.all(again.timeshifts.shifts == 0.0)
    assert np.array_equal(again.reduced.values, r.reduced.values)


# --- distinct delay counting -----------------------------------------------------


def test_count_distinct_delays():
    top = NetworkTopology.from_pairs(3, [(1, 2), (2, 3), (3, 1)])
    assert count_distinct_delays(DelayDistribution(top, [0.0, 0.0, 9.0])) == 1
    assert count_distinct_delays(DelayDistribution(top, [2.0, 3.0, 4.0])) == 3
    assert count_distinct_delays([1.0, 1.0 + 1e-12], tol=1e-9) == 1


# --- reducibility search ---------------------------------------------------------


def test_ring_reduces_to_one_delay(ring3):
    cert = reducibility_search(ring3, m=1)
    assert cert is not None
    assert cert.values == [9.0]
    assert cert.residual <= 1e-9


def test_twocycle_needs_two_delays(twocycle):
    out = search_reducibility(twocycle, m=1)
    assert not out.feasible
    assert out.min_residual > 0.2
    cert = reducibility_search(twocycle, m=2)
    assert sorted(cert.values) == [2.0, 3.0]
    assert list(cert.timeshifts.shifts) == [0.0, 1.0]
    assert cert.residual == 0.0


def test_search_guard_names_alternative():
    rng = np.random.default_rng(1)
    top = random_connected_topology(rng, 4, 15)
    with pytest.raises(ReductionError, match="reduce_to_spanning_tree"):
        reducibility_search(DelayDistribution(top, rng.uniform(0, 1, 15)), m=2)


def _canonical_labelings(L, m):
    for q in itertools.product(range(m + 1), repeat=L):
        used = 0
        for k in q:
            if k > used + 1:
                break
            used = max(used, k)
        else:
            yield q


def _brute_force(tau, m, tol=1e-9):
    """Plain enumeration in lexicographic order with a least-squares fit each."""
    top = tau.topology
    N, L = top.node_count, top.edge_count
    for q in _canonical_labelings(L, m):
        used = max(q)
        G = np.zeros((L, N - 1 + used))
        for l in range(L):
            s, t = top.sources[l], top.targets[l]
            if t > 0:
                G[l, t - 1] += 1
            if s > 0:
                G[l, s - 1] -= 1
            if q[l]:
                G[l, N - 2 + q[l]] = 1
        x = np.linalg.lstsq(G, tau.values, rcond=None)[0]
        if np.max(np.abs(G @ x - tau.values)) > tol:
            continue
        theta = x[N - 1 :]
        if np.any(theta <= 0):
            continue
        if any(abs(a - b) <= 1e-9 for a, b in itertools.combinations(theta, 2)):
            continue
        return q, sorted(theta)
    return None


@given(st.integers(0, 2**31), st.integers(1, 3))
def test_search_matches_brute_force(seed, m):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 4))
    l = int(rng.integers(max(n - 1, 1), 6))
    top = random_connected_topology(rng, n, l)
    # small integers make exact reductions common
    tau = DelayDistribution(top, rng.integers(0, 4, l).astype(float))
    expected = _brute_force(tau, m)
    got = reducibility_search(tau, m=m)
    if expected is None:
        assert got is None
    else:
        q, theta = expected
        assert got is not None
        assert tuple(got.assignment[k] for k in top.edge_ids) == q
        assert np.allclose(sorted(got.values), theta, atol=1e-9)


@given(networks(max_nodes=5, max_edges=9))
def test_search_succeeds_with_essential_count(tau):
    C = essential_delay_count(tau.topology)
    cert = reducibility_search(tau, m=C)
    assert cert is not None
    assert len(cert.values) <= C
    shifted = apply_timeshift(tau, cert.timeshifts).values
    assert count_distinct_delays(shifted[shifted > 1e-9]) <= C


@given(networks(max_nodes=5, max_edges=9))
def test_search_fails_below_essential_count(tau):
    C = essential_delay_count(tau.topology)
    if C == 0:
        return
    out = search_reducibility(tau, m=C - 1)
    assert not out.feasible
    assert out.min_residual > 1e-6


def test_node_budget_gives_incomplete_outcome():
    rng = np.random.default_rng(5)
    top = random_connected_topology(rng, 4, 12)
    tau = DelayDistribution(top, rng.uniform(0, 10, 12))
    C = essential_delay_count(top)
    cut = search_reducibility(tau, m=C - 1, max_nodes=50)
    assert not cut.feasible and not cut.complete
    assert cut.to_json()["complete"] is False
    full = search_reducibility(tau, m=C - 1)
    assert full.complete and full.nodes > 50
    assert "complete" not in full.to_json()
