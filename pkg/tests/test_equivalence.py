import math

import numpy as np
import pytest
from scipy.optimize import brentq

from delaynet import (
    DelayDistribution,
    HistorySegment,
    NetworkTopology,
    Region,
    SystemDefinition,
    TimeshiftVector,
    apply_timeshift,
    characteristic_roots,
    compare_spectra,
    dominant_floquet_exponent,
    estimate_mle,
    reduce_to_spanning_tree,
    simulate,
    transform_state,
    verify_trajectory_correspondence,
)

LOOP = NetworkTopology.from_pairs(1, [(1, 1)])
PAIR = NetworkTopology.from_pairs(2, [(1, 2), (2, 1)])


def pair_system():
    return SystemDefinition.linear(PAIR, d=-1.0, weights=[0.5, -0.5])


def newton_root(seed, tau=1.0):
    """Root of lam + exp(-lam tau) = 0 by plain complex Newton."""
    z = complex(seed)
    for _ in range(60):
        z -= (z + np.exp(-z * tau)) / (1 - tau * np.exp(-z * tau))
    return z


def smooth_history(lags, dt, n):
    a = np.linspace(0.4, 1.0, n)[:, None]
    return HistorySegment.from_function(
        lambda t: a * np.cos(t) + 0.2 * t, lags, dt,
        derivative=lambda t: -a * np.sin(t) + 0.2 + 0 * t,
    )


def window_max(a: HistorySegment, b: HistorySegment, lags) -> float:
    """Max difference over each node's own window [-r_j, 0]."""
    out = 0.0
    for j, r in enumerate(lags):
        k = int(math.ceil(r / a.dt - 1e-9))
        out = max(out, float(np.max(np.abs(a.values[j, a.depth - k:] - b.values[j, b.depth - k:]))))
    return out


# --- state transformation -----------------------------------------------------------


def test_zero_shift_restricts_history():
    tau = DelayDistribution(PAIR, [2.0, 3.0])
    h = smooth_history([2.0, 3.0], 0.1, 2)
    out = transform_state(h, PAIR, tau, TimeshiftVector.zeros(2), pair_system())
    assert window_max(out, h, tau.node_lags()) == 0.0


def test_equilibrium_history_is_fixed():
    tau = DelayDistribution(PAIR, [2.0, 3.0])
    h = HistorySegment.constant([0.0, 0.0], tau.node_lags(), 0.1)
    out = transform_state(h, PAIR, tau, TimeshiftVector([0.0, 2.0]), pair_system())
    assert np.all(out.values == 0.0)


def test_warm_up_segment_is_stitched():
    # node 1: x' = -x(t-1), shifted by 0.5; node 2 is only a passive listener
    top = NetworkTopology.from_pairs(2, [(1, 1), (2, 2), (1, 2)])
    tau = DelayDistribution(top, [1.0, 1.0, 0.5])
    sys = SystemDefinition.linear(top, d=0.0, weights=[-1.0, -1.0, 0.0])
    dt = 0.05
    h = HistorySegment.constant([1.0, 1.0], tau.node_lags(), dt)
    eta = TimeshiftVector([0.5, 0.0])
    out = transform_state(h, top, tau, eta, sys)
    assert apply_timeshift(tau, eta).node_lags()[0] == 1.0
    t = out.times()
    row = out.values[0]
    old = (t >= -1.0 - 1e-12) & (t <= -0.5 + 1e-12)
    new = t >= -0.5 - 1e-12
    assert np.allclose(row[old], 1.0, atol=1e-12)
    assert np.allclose(row[new], 1.0 - (t[new] + 0.5), atol=1e-12)


def test_noncanonical_shift_rejected():
    tau = DelayDistribution(PAIR, [2.0, 3.0])
    h = HistorySegment.constant([1.0, 1.0], tau.node_lags(), 0.1)
    with pytest.raises(ValueError, match="canonical"):
        transform_state(h, PAIR, tau, TimeshiftVector([1.0, 2.0]), pair_system())


def test_commutation_on_grid():
    tau = DelayDistribution(PAIR, [2.0, 3.0])
    sys, dt = pair_system(), 0.01
    red = reduce_to_spanning_tree(tau)
    eta, tilde = red.timeshifts, red.reduced
    x0 = smooth_history(tau.node_lags(), dt, 2)
    x = simulate(PAIR, tau, sys, x0, 10.0, dt)
    y = simulate(PAIR, tilde, sys, transform_state(x0, PAIR, tau, eta, sys), 10.0, dt)
    for s in (1.0, 5.0, 10.0):
        lhs = transform_state(x.history_at(s), PAIR, tau, eta, sys)
        rhs = y.history_at(s, lhs.lags)
        assert window_max(lhs, rhs, lhs.lags) <= 1e-8


def test_reverse_transform_recovers_shifted_flow():
    top = NetworkTopology.from_pairs(3, [(1, 2), (2, 3), (3, 1), (1, 3)])
    tau = DelayDistribution(top, [0.4, 0.9, 0.6, 1.3])
    sys = SystemDefinition.linear(top, d=-1.0, weights=[0.6, -0.4, 0.5, 0.3])
    dt = 0.01
    red = reduce_to_spanning_tree(tau)
    eta, tilde = red.timeshifts, red.reduced
    x0 = smooth_history(tau.node_lags(), dt, 3)
    y0 = transform_state(x0, top, tau, eta, sys)
    back = transform_state(y0, top, tilde, eta.reverse(), sys)
    assert np.allclose(apply_timeshift(tilde, eta.reverse()).values, tau.values, atol=1e-12)
    x = simulate(top, tau, sys, x0, eta.max_shift, dt)
    expected = x.history_at(x.t_end, back.lags)
    assert window_max(back, expected, tau.node_lags()) <= 1e-8


# --- trajectories -------------------------------------------------------------------


def test_already_reduced_input_gives_identical_runs():
    tau = DelayDistribution(PAIR, [0.0, 5.0])
    rep = verify_trajectory_correspondence(
        PAIR, tau, pair_system(), smooth_history(tau.node_lags(), 0.01, 2), 10.0, 0.01)
    assert rep.max_trajectory_deviation == 0.0


def test_equilibrium_runs_stay_constant():
    tau = DelayDistribution(PAIR, [2.0, 3.0])
    h = HistorySegment.constant([0.0, 0.0], tau.node_lags(), 0.01)
    rep = verify_trajectory_correspondence(PAIR, tau, pair_system(), h, 20.0, 0.01)
    assert rep.max_trajectory_deviation <= 1e-12


# --- characteristic roots -----------------------------------------------------------


def test_ode_limit_has_single_root():
    tau = DelayDistribution(LOOP, [0.0])
    sys = SystemDefinition.linear(LOOP, d=0.0, weights=-1.0)
    found = characteristic_roots(LOOP, tau, sys, [0.0], Region(-5, 5, -1, 1))
    assert len(found.roots) == 1
    assert abs(found.roots[0] + 1.0) <= 1e-12


def test_leading_root_of_delayed_decay():
    oracle = newton_root(-0.3 + 1.3j)
    assert abs(oracle - (-0.3181 + 1.3372j)) <= 1e-4
    tau = DelayDistribution(LOOP, [1.0])
    sys = SystemDefinition.linear(LOOP, d=0.0, weights=-1.0)
    found = characteristic_roots(LOOP, tau, sys, [0.0], Region(-2, 0, 0, 3))
    assert min(abs(z - oracle) for z in found.roots) <= 1e-4
    assert all(r <= 1e-10 for r in found.residuals)


def test_decoupled_copies_share_the_spectrum():
    top = NetworkTopology.from_pairs(2, [(1, 1), (2, 2)])
    tau = DelayDistribution(top, [1.0, 1.0])
    sys = SystemDefinition.linear(top, d=0.0, weights=-1.0)
    region = Region(-3, 1, -20, 20)
    single = characteristic_roots(
        LOOP, DelayDistribution(LOOP, [1.0]), SystemDefinition.linear(LOOP, d=0.0, weights=-1.0),
        [0.0], region)
    double = characteristic_roots(top, tau, sys, [0.0, 0.0], region)
    assert len(double.roots) == len(single.roots) > 0
    for z in single.roots:
        assert min(abs(z - w) for w in double.roots) <= 1e-8
    assert all(r <= 1e-10 for r in double.residuals)


def test_spectrum_is_closed_under_conjugation_and_distinct():
    tau = DelayDistribution(PAIR, [2.0, 3.0])
    found = characteristic_roots(PAIR, tau, pair_system(), [0.0, 0.0], Region(-3, 1, -10, 10))
    roots = found.roots
    for z in roots:
        if abs(z.imag) > 1e-9:
            assert min(abs(z.conjugate() - w) for w in roots) <= 1e-8
    gaps = [abs(a - b) for i, a in enumerate(roots) for b in roots[i + 1:]]
    assert min(gaps) >= 1e-6


def test_unshifted_spectra_match_exactly():
    tau = DelayDistribution(PAIR, [0.0, 5.0])
    ok, dist, _, _ = compare_spectra(PAIR, tau, pair_system(), [0.0, 0.0],
                                     Region(-3, 1, 0, 20), reduced=tau)
    assert ok and dist == 0.0


def test_reduced_spectrum_matches():
    tau = DelayDistribution(PAIR, [2.0, 3.0])
    ok, dist, a, b = compare_spectra(PAIR, tau, pair_system(), [0.0, 0.0], Region(-3, 1, 0, 20))
    assert ok
    assert dist <= 1e-8
    assert len(a.roots) == len(b.roots) > 5


def test_perturbed_roundtrip_changes_spectrum():
    tau = DelayDistribution(PAIR, [2.0, 3.0])
    wrong = DelayDistribution(PAIR, [0.0, 5.1])
    ok, dist, _, _ = compare_spectra(PAIR, tau, pair_system(), [0.0, 0.0],
                                     Region(-3, 1, 0, 20), reduced=wrong)
    assert not ok
    assert dist > 1e-8


# --- exponents ----------------------------------------------------------------------


def test_mle_of_exponential_decay():
    tau = DelayDistribution(LOOP, [0.0])
    sys = SystemDefinition.linear(LOOP, d=0.0, weights=-1.0)
    h = HistorySegment.constant([1.0], tau.node_lags(), 0.01)
    est = estimate_mle(LOOP, tau, sys, h, 50.0)
    assert abs(est.value + 1.0) <= 2e-2


def test_mle_of_delayed_decay_matches_leading_root():
    oracle = newton_root(-0.3 + 1.3j).real
    tau = DelayDistribution(LOOP, [1.0])
    sys = SystemDefinition.linear(LOOP, d=0.0, weights=-1.0)
    h = HistorySegment.constant([1.0], tau.node_lags(), 0.01)
    est = estimate_mle(LOOP, tau, sys, h, 200.0)
    assert abs(est.value - oracle) <= 5e-2


def test_mle_is_seeded():
    tau = DelayDistribution(PAIR, [2.0, 3.0])
    h = HistorySegment.constant([1.0, -0.5], tau.node_lags(), 0.02)
    a = estimate_mle(PAIR, tau, pair_system(), h, 40.0, seed=3)
    b = estimate_mle(PAIR, tau, pair_system(), h, 40.0, seed=3)
    assert a.value == b.value and a.half_width == b.half_width


def test_floquet_at_equilibrium_gives_leading_root():
    oracle = brentq(lambda x: x + 2 - 0.5 * math.exp(-x), -3, 0)
    tau = DelayDistribution(LOOP, [1.0])
    sys = SystemDefinition.linear(LOOP, d=-2.0, weights=0.5)
    orbit = simulate(LOOP, tau, sys, HistorySegment.constant([0.0], [1.0], 0.01), 10.0, 0.01)
    est = dominant_floquet_exponent(LOOP, tau, sys, orbit, 2.0)
    assert abs(est.value - oracle) <= 1e-3


def test_floquet_without_dynamics_decays_to_zero():
    tau = DelayDistribution(LOOP, [1.0])
    sys = SystemDefinition.linear(LOOP, d=0.0, weights=0.0)
    orbit = simulate(LOOP, tau, sys, HistorySegment.constant([0.0], [1.0], 0.01), 10.0, 0.01)
    est = dominant_floquet_exponent(LOOP, tau, sys, orbit, 2.0)
    assert est.decays_to_zero and est.value == -math.inf
