"""Numerical checks that a timeshifted network behaves like the original.

Shifting node ``j`` by ``eta_j`` maps a solution ``x`` of the original
network to ``y_j(t) = x_j(t + eta_j)``, a solution of the network with the
shifted delays.  The functions here build that map on histories, compare
trajectories, characteristic roots at equilibria and Lyapunov/Floquet
exponents of the two systems.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize_scalar
from scipy.signal import find_peaks

from .dde import (
    DivergenceError,
    HistorySegment,
    SystemDefinition,
    Trajectory,
    mg_gain_slope,
    simulate,
    simulate_variational,
    value_at,
)
from .graph import DelayDistribution, NetworkTopology, TimeshiftVector
from .reduce import apply_timeshift, reduce_to_spanning_tree

__all__ = [
    "CharacteristicSpectrum",
    "EquivalenceReport",
    "ExponentEstimate",
    "OrbitError",
    "Region",
    "transform_state",
    "verify_trajectory_correspondence",
    "characteristic_matrix",
    "characteristic_roots",
    "compare_spectra",
    "estimate_mle",
    "find_periodic_orbit",
    "orbit_mismatch",
    "dominant_floquet_exponent",
]

log = logging.getLogger(__name__)

ROOT_RESIDUAL = 1e-10
ROOT_DEDUP = 1e-6
PAIRING_TOL = 1e-8
BOUNDARY_MARGIN = 1e-6


class OrbitError(ValueError):
    """The supplied trajectory is not periodic to the required accuracy."""


# ----------------------------------------------------------------------------
# state transformation


def transform_state(
    x0: HistorySegment,
    topology: NetworkTopology,
    tau: DelayDistribution,
    eta: TimeshiftVector,
    system: SystemDefinition,
) -> HistorySegment:
    """History of the shifted network that corresponds to ``x0``.

    The original network is run from ``x0`` for ``max(eta)``; node ``j`` of
    the result then reads ``t -> x_j(t + eta_j)`` on ``[-r~_j, 0]`` where
    ``r~_j`` is the longest shifted delay leaving ``j``.  The portion with
    ``t + eta_j <= 0`` comes straight from ``x0``, the rest from the run.
    """
    if not eta.is_canonical(atol=1e-12):
        raise ValueError("timeshifts must be canonical (smallest entry 0)")
    dt = x0.dt
    shifted = apply_timeshift(tau, eta)
    new_lags = shifted.node_lags()
    steps = int(math.ceil(eta.max_shift / dt - 1e-9))
    run = simulate(topology, tau, system, x0, steps * dt, dt)
    depth = HistorySegment.grid_depth(new_lags, dt)
    t = (np.arange(depth + 1) - depth) * dt
    N = topology.node_count
    vals = np.empty((N, depth + 1))
    right = np.empty_like(vals)
    left = np.empty_like(vals)
    for j in range(N):
        lo = -run.lags[j]
        for i, ti in enumerate(t):
            s = ti + eta.shifts[j]
            if s < lo - 1e-9 * dt:
                # below r~_j nothing reads this sample; pad with the oldest value
                s = lo
            vals[j, i], left[j, i], right[j, i] = _sample(run, j, s)
    return HistorySegment(dt, vals, right, new_lags, left)


def _sample(run: Trajectory, j: int, s: float):
    """Value with left and right derivative of node ``j`` at time ``s``."""
    pos = (s - run.t0) / run.dt + run.offset
    i = round(pos)
    if abs(pos - i) <= 1e-9:
        return run.values[j, i], run.dleft[j, i], run.dright[j, i]
    d = run.derivative_at(j + 1, s)
    return value_at(run, j + 1, s), d, d


def verify_trajectory_correspondence(
    topology: NetworkTopology,
    tau: DelayDistribution,
    system: SystemDefinition,
    x0: HistorySegment,
    t_end: float,
    dt: float,
    reduction=None,
) -> "EquivalenceReport":
    """Run both networks and report ``max |y_j(t) - x_j(t + eta_j)|`` on the grid.

    ``x`` is the original run from ``x0`` up to ``t_end + max(eta)``; ``y``
    is the reduced network started from the transformed history.
    """
    reduction = reduction or reduce_to_spanning_tree(tau, topology)
    eta = reduction.timeshifts
    shift_steps = int(math.ceil(eta.max_shift / dt - 1e-9))
    x = simulate(topology, tau, system, x0, t_end + shift_steps * dt, dt)
    y0 = transform_state(x0, topology, tau, eta, system)
    y = simulate(topology, reduction.reduced, system, y0, t_end, dt)
    ty, yv = y.solution()
    dev = 0.0
    for j in range(topology.node_count):
        target = ty + eta.shifts[j]
        pos = (target - x.t0) / dt + x.offset
        idx = np.rint(pos).astype(int)
        if np.all(np.abs(pos - idx) <= 1e-9):
            xv = x.values[j, idx]
        else:
            xv = np.array([value_at(x, j + 1, s) for s in target])
        dev = max(dev, float(np.max(np.abs(yv[j] - xv))))
    return EquivalenceReport(
        max_trajectory_deviation=dev,
        tolerances={"dt": dt, "t_end": t_end},
        timeshifts=[float(v) for v in eta.shifts],
    )


# ----------------------------------------------------------------------------
# characteristic roots


@dataclass(frozen=True)
class Region:
    re_min: float
    re_max: float
    im_min: float
    im_max: float

    def __post_init__(self):
        if not (self.re_min < self.re_max and self.im_min < self.im_max):
            raise ValueError("region bounds must satisfy min < max")

    def contains(self, z: complex, margin: float = 0.0) -> bool:
        return (
            self.re_min - margin <= z.real <= self.re_max + margin
            and self.im_min - margin <= z.imag <= self.im_max + margin
        )

    def near_boundary(self, z: complex, margin: float = BOUNDARY_MARGIN) -> bool:
        return self.contains(z, margin) and not self.contains(z, -margin)


@dataclass(frozen=True)
class CharacteristicSpectrum:
    roots: list[complex]
    residuals: list[float]
    region: Region

    def to_json(self) -> list[list[float]]:
        return [[z.real, z.imag] for z in self.roots]


def characteristic_matrix(topology, tau, system, xbar):
    """Return ``J0`` and per-edge coefficients for ``Delta(lam)``.

    ``Delta(lam) = lam I - diag(J0) - sum_l A_l exp(-lam tau_l)`` where
    ``A_l`` has the single entry ``edge[l]`` at ``(t(l), s(l))``.
    """
    diag, edge = system.jacobians(topology, np.asarray(xbar, float))
    return diag, edge


def _delta(lams, diag, edge, src, tgt, delays, N):
    """Batched ``Delta`` and ``dDelta/dlam`` for an array of ``lam``."""
    lams = np.asarray(lams, complex)
    S = lams.size
    D = np.zeros((S, N, N), complex)
    dD = np.zeros((S, N, N), complex)
    idx = np.arange(N)
    D[:, idx, idx] = lams[:, None] - diag[None, :]
    dD[:, idx, idx] = 1.0
    ex = np.exp(-np.outer(lams, delays))  # S x L
    for l in range(delays.size):
        D[:, tgt[l], src[l]] -= edge[l] * ex[:, l]
        dD[:, tgt[l], src[l]] += delays[l] * edge[l] * ex[:, l]
    return D, dD


def _newton_steps(D, dD):
    """Newton corrections from the eigenvalue of ``Delta`` closest to zero.

    For ``mu(lam)`` with right/left eigenvectors ``x``, ``y`` the derivative
    is ``y^H Delta' x / y^H x``; the step stays quadratic for semisimple
    multiple roots, unlike Newton on the determinant.
    """
    S, N, _ = D.shape
    if N == 1:
        return D[:, 0, 0] / dD[:, 0, 0]
    w, V = np.linalg.eig(D)
    k = np.argmin(np.abs(w), axis=1)
    rows = np.arange(S)
    mu = w[rows, k]
    x = V[rows, :, k]
    wl, U = np.linalg.eig(np.conj(np.transpose(D, (0, 2, 1))))
    kl = np.argmin(np.abs(wl - np.conj(mu)[:, None]), axis=1)
    y = U[rows, :, kl]
    num = np.einsum("si,sij,sj->s", np.conj(y), dD, x)
    den = np.einsum("si,si->s", np.conj(y), x)
    with np.errstate(divide="ignore", invalid="ignore"):
        deriv = num / den
        step = mu / deriv
    bad = ~np.isfinite(step)
    if np.any(bad):
        # fall back to Newton on log det: 1 / tr(Delta^-1 Delta')
        tr = np.trace(np.linalg.solve(D[bad], dD[bad]), axis1=1, axis2=2)
        step[bad] = 1.0 / tr
    return step


def _normalized_det(D):
    """``|det Delta|`` divided by its Hadamard bound ``prod max(1, ||row||)``."""
    det = np.abs(np.linalg.det(D))
    scale = np.prod(np.maximum(1.0, np.linalg.norm(D, axis=2)), axis=1)
    return det / scale


def characteristic_roots(
    topology: NetworkTopology,
    tau: DelayDistribution,
    system: SystemDefinition,
    xbar,
    region: Region,
    grid_density: int = 40,
    extra_seeds=(),
    max_iter: int = 80,
) -> CharacteristicSpectrum:
    """Roots of ``det Delta(lam) = 0`` inside ``region``.

    Newton is started from a ``grid_density x grid_density`` grid over the
    region (plus ``extra_seeds``); converged roots are polished, filtered to
    the region, deduplicated at ``1e-6`` and completed by conjugates that
    fall inside.  The accepted residual is the normalized determinant,
    ``|det| / prod max(1, ||row||)``, at most ``1e-10``.  Grid seeding can
    miss roots; there is no counting argument behind the result.
    """
    N = topology.node_count
    diag, edge = characteristic_matrix(topology, tau, system, xbar)
    src, tgt, delays = topology.sources, topology.targets, tau.values
    re = np.linspace(region.re_min, region.re_max, grid_density)
    im = np.linspace(region.im_min, region.im_max, grid_density)
    seeds = (re[None, :] + 1j * im[:, None]).ravel()
    seeds = np.concatenate([seeds, np.asarray(list(extra_seeds), complex)])
    lam = seeds.copy()
    active = np.ones(lam.size, bool)
    span = max(region.re_max - region.re_min, region.im_max - region.im_min)
    for _ in range(max_iter):
        if not active.any():
            break
        D, dD = _delta(lam[active], diag, edge, src, tgt, delays, N)
        with np.errstate(all="ignore"):
            step = _newton_steps(D, dD)
        new = lam[active] - step
        idx = np.flatnonzero(active)
        lam[idx] = new
        fin = np.isfinite(new)
        far = ~fin | (np.abs(new.real - 0.5 * (region.re_min + region.re_max)) > 4 * span) | (
            np.abs(new.imag - 0.5 * (region.im_min + region.im_max)) > 4 * span
        )
        done = fin & (np.abs(step) <= 1e-14 * np.maximum(1.0, np.abs(new)))
        active[idx[done | far]] = False
        lam[idx[~fin]] = np.nan
    lam = lam[np.isfinite(lam)]
    cands = [z for z in lam if region.contains(z, BOUNDARY_MARGIN)]
    roots: list[complex] = []
    for z in sorted(cands, key=lambda c: (round(c.real, 6), round(c.imag, 6))):
        if all(abs(z - r) > ROOT_DEDUP for r in roots):
            roots.append(complex(z))
    for z in list(roots):
        zc = z.conjugate()
        if abs(z.imag) > 1e-9 and region.contains(zc) and all(abs(zc - r) > ROOT_DEDUP for r in roots):
            roots.append(zc)
    kept, res = [], []
    if roots:
        D, _ = _delta(np.array(roots), diag, edge, src, tgt, delays, N)
        nd = _normalized_det(D)
        for z, r in zip(roots, nd):
            if r <= ROOT_RESIDUAL:
                kept.append(z)
                res.append(float(r))
    order = sorted(range(len(kept)), key=lambda i: (kept[i].real, kept[i].imag))
    return CharacteristicSpectrum([kept[i] for i in order], [res[i] for i in order], region)


def _pair(a: list[complex], b: list[complex]) -> float:
    """Greedy nearest-neighbour pairing; largest pair distance."""
    left = list(b)
    worst = 0.0
    for z in sorted(a, key=lambda c: (c.real, c.imag)):
        if not left:
            return math.inf
        k = int(np.argmin([abs(z - w) for w in left]))
        worst = max(worst, abs(z - left.pop(k)))
    return worst


def compare_spectra(
    topology: NetworkTopology,
    tau: DelayDistribution,
    system: SystemDefinition,
    xbar,
    region: Region,
    reduced: DelayDistribution | None = None,
    grid_density: int = 40,
):
    """Characteristic roots of ``tau`` against those of the reduced delays.

    Returns ``(matched, max_distance, roots_tau, roots_reduced)``.  Roots
    found for one distribution also seed the search for the other, which
    only improves completeness.  Roots within ``1e-6`` of the region
    boundary are left out of the count.
    """
    if reduced is None:
        reduced = reduce_to_spanning_tree(tau, topology).reduced
    a = characteristic_roots(topology, tau, system, xbar, region, grid_density)
    b = characteristic_roots(topology, reduced, system, xbar, region, grid_density, a.roots)
    a = characteristic_roots(topology, tau, system, xbar, region, grid_density, b.roots)
    ia = [z for z in a.roots if not region.near_boundary(z)]
    ib = [z for z in b.roots if not region.near_boundary(z)]
    small, large = (ia, b.roots) if len(ia) <= len(ib) else (ib, a.roots)
    dist = _pair(small, large) if small else 0.0
    if len(ia) != len(ib):
        return False, dist, a, b
    dist = max(dist, _pair(ib, a.roots)) if ib else dist
    return dist <= PAIRING_TOL, dist, a, b


# ----------------------------------------------------------------------------
# Lyapunov exponents


@dataclass(frozen=True)
class ExponentEstimate:
    value: float
    half_width: float
    lower_bound_only: bool = False
    samples: np.ndarray = field(default=None, repr=False)

    def to_json(self) -> dict:
        out = {"value": self.value, "half_width": self.half_width}
        if self.lower_bound_only:
            out["lower_bound_only"] = True
        return out


def _window_distance(a: HistorySegment, b: HistorySegment) -> float:
    """Max-norm of ``a - b`` over each node's own window ``[-r_j, 0]``."""
    d = 0.0
    K = a.depth
    for j in range(a.node_count):
        k = int(math.ceil(a.lags[j] / a.dt - 1e-9))
        d = max(d, float(np.max(np.abs(a.values[j, K - k :] - b.values[j, K - k :]))))
    return d


def estimate_mle(
    topology: NetworkTopology,
    tau: DelayDistribution,
    system: SystemDefinition,
    x0: HistorySegment,
    t_end: float,
    renorm_interval: float = 1.0,
    transient: float = 0.2,
    seed: int = 0,
    delta0: float = 1e-8,
    blocks: int = 10,
) -> ExponentEstimate:
    """Two-trajectory (Benettin) estimate of the maximal Lyapunov exponent.

    The companion history is ``x0`` plus a constant offset of max-norm
    ``delta0`` in a seeded random direction.  After every
    ``renorm_interval`` the separation ``d`` (max-norm over the history
    window) is logged as ``ln(d / delta0)`` and rescaled to ``delta0``.
    The estimate averages the rates after the first ``transient`` fraction;
    the half-width is the standard error of ``blocks`` block means.
    """
    dt = x0.dt
    rng = np.random.default_rng(seed)
    direction = rng.uniform(-1.0, 1.0, topology.node_count)
    direction /= np.max(np.abs(direction))
    steps = max(1, int(round(renorm_interval / dt)))
    h = steps * dt
    n_int = int(t_end // h)
    if n_int < 2 * blocks:
        raise ValueError("t_end too short for the requested renormalization interval")
    ref = x0
    pert = HistorySegment(dt, x0.values + delta0 * direction[:, None], x0.slopes, x0.lags,
                          x0.slopes_left)
    rates = np.empty(n_int)
    collapsed = False
    for k in range(n_int):
        a = simulate(topology, tau, system, ref, h, dt)
        b = simulate(topology, tau, system, pert, h, dt)
        ref, nxt = a.history_at(h), b.history_at(h)
        d = _window_distance(ref, nxt)
        if d < 1e-300:
            collapsed = True
            rates[k] = math.log(1e-300 / delta0) / h
            nxt = HistorySegment(dt, ref.values + delta0 * direction[:, None], ref.slopes,
                                 ref.lags, ref.slopes_left)
        else:
            rates[k] = math.log(d / delta0) / h
            c = delta0 / d
            nxt = HistorySegment(
                dt,
                ref.values + c * (nxt.values - ref.values),
                ref.slopes + c * (nxt.slopes - ref.slopes),
                ref.lags,
                ref.slopes_left + c * (nxt.slopes_left - ref.slopes_left),
            )
        pert = nxt
    kept = rates[int(math.floor(transient * n_int)) :]
    nb = min(blocks, kept.size)
    means = np.array([m.mean() for m in np.array_split(kept, nb)])
    hw = float(np.std(means, ddof=1) / math.sqrt(nb)) if nb > 1 else math.inf
    return ExponentEstimate(float(kept.mean()), hw, collapsed, rates)


# ----------------------------------------------------------------------------
# periodic orbits and Floquet exponents


def find_periodic_orbit(
    topology: NetworkTopology,
    tau: DelayDistribution,
    system: SystemDefinition,
    x0: HistorySegment,
    dt: float,
    t_transient: float = 400.0,
    window: float = 60.0,
    node: int = 1,
):
    """Simulate past the transient and measure the period on ``node``.

    The period is first estimated from successive maxima (the shortest
    return to a matching maximum) and then refined by minimizing the
    mismatch ``max |x(t + T) - x(t)|`` over the last stretch.  Returns the
    trajectory and ``T``.
    """
    traj = simulate(topology, tau, system, x0, t_transient + window, dt)
    t, x = traj.solution()
    mask = t >= t_transient
    tw, xw = t[mask], x[node - 1, mask]
    peaks, _ = find_peaks(xw)
    if peaks.size < 3:
        raise OrbitError("no oscillation detected on the selected node")
    tp, xp = tw[peaks], xw[peaks]
    last = peaks.size - 1
    scale = max(1e-12, float(np.ptp(xw)))
    period = None
    for k in range(1, last + 1):
        if abs(xp[last] - xp[last - k]) < 1e-3 * scale:
            period = tp[last] - tp[last - k]
            break
    if period is None:
        raise OrbitError("maxima do not repeat; the attractor is not periodic")
    r = float(traj.lags.max(initial=0.0))
    span = max(r, period)
    t_hi = traj.t_end - period - 3 * dt
    probe = np.linspace(t_hi - span, t_hi, 400)

    def mismatch(T):
        return max(
            abs(value_at(traj, j + 1, s + T) - value_at(traj, j + 1, s))
            for j in range(topology.node_count)
            for s in probe
        )

    res = minimize_scalar(mismatch, bounds=(period - 2 * dt, period + 2 * dt), method="bounded",
                          options={"xatol": 1e-12})
    return traj, float(res.x)


def orbit_mismatch(orbit: Trajectory, period: float) -> float:
    """``max |x(t + T) - x(t)|`` over the last ``max(r, T)`` of overlap."""
    r = float(orbit.lags.max(initial=0.0))
    span = max(r, period)
    hi = orbit.t_end - period
    lo = max(orbit.t0 - r, hi - span)
    if hi <= lo:
        raise OrbitError("orbit shorter than one period")
    probe = np.linspace(lo, hi, 400)
    return max(
        abs(value_at(orbit, j + 1, s + period) - value_at(orbit, j + 1, s))
        for j in range(orbit.node_count)
        for s in probe
    )


@dataclass(frozen=True)
class FloquetEstimate:
    value: float
    deflated: bool
    decays_to_zero: bool = False
    growth: np.ndarray = field(default=None, repr=False)


def _coefficient_tables(topology, tau, system, orbit, t_start, dt_f, P):
    """Half-step tables of ``df_j/dx_j`` and ``df_t/dx_s(t - tau)`` along the orbit."""
    N, L = topology.node_count, topology.edge_count
    diag, _ = system.jacobians(topology, np.zeros(N))
    dtab = np.repeat(np.asarray(diag, float)[:, None], 2 * P, axis=1)
    if system.kind == "linear":
        return dtab, np.repeat(system.weights[:, None], 2 * P, axis=1)
    times = t_start + 0.5 * dt_f * np.arange(2 * P)
    u = np.zeros((N, 2 * P))
    for l in range(L):
        s, t = topology.sources[l], topology.targets[l]
        vals = np.array([value_at(orbit, s + 1, ti - tau.values[l]) for ti in times])
        u[t] += system.weights[l] * vals
    p = system.params
    slope = mg_gain_slope(u, p["n"][:, None]) * p["beta"][:, None]
    atab = system.weights[:, None] * slope[topology.targets]
    return dtab, atab


def dominant_floquet_exponent(
    topology: NetworkTopology,
    tau: DelayDistribution,
    system: SystemDefinition,
    periodic_orbit: Trajectory,
    period: float,
    n_iterations: int = 40,
    dt: float | None = None,
    seed: int = 0,
    periodicity_tol: float = 1e-6,
) -> FloquetEstimate:
    """Leading nontrivial Floquet exponent by power iteration on the period map.

    The variational equation is integrated over one period at a time with
    step ``T / round(T / dt)``, coefficients taken from the last period of
    ``periodic_orbit``, and renormalized after each period.  The estimate
    averages ``ln(growth) / T`` over the second half of the iterations.
    If it lies within ``1e-3`` of zero the orbit's own derivative (the
    neutral direction) is projected out each period and the iteration is
    repeated.
    """
    mis = orbit_mismatch(periodic_orbit, period)
    if mis > periodicity_tol:
        raise OrbitError(f"orbit is not {period:.9g}-periodic: mismatch {mis:.3g}")
    dt = dt or periodic_orbit.dt
    P = max(1, int(round(period / dt)))
    dt_f = period / P
    t_start = periodic_orbit.t_end - period
    dtab, atab = _coefficient_tables(topology, tau, system, periodic_orbit, t_start, dt_f, P)
    lags = tau.node_lags()
    depth = HistorySegment.grid_depth(lags, dt_f)
    if not np.any(atab) and not np.any(dtab):
        return FloquetEstimate(-math.inf, False, True)
    rng = np.random.default_rng(seed)
    times = t_start - dt_f * (depth - np.arange(depth + 1))
    neutral = np.array(
        [[periodic_orbit.derivative_at(j + 1, s) for s in times] for j in range(topology.node_count)]
    )
    mask = np.zeros_like(neutral, bool)
    for j in range(topology.node_count):
        k = int(math.ceil(lags[j] / dt_f - 1e-9))
        mask[j, depth - k :] = True
    neutral = np.where(mask, neutral, 0.0)
    neutral_slopes = np.gradient(neutral, dt_f, axis=1) if depth > 1 else np.zeros_like(neutral)

    def iterate(deflate):
        vals = rng.standard_normal((topology.node_count, depth + 1)) * mask
        slopes = np.zeros_like(vals)
        growth = np.empty(n_iterations)
        for it in range(n_iterations):
            if deflate:
                vals, slopes = _project(vals, slopes, neutral, neutral_slopes, mask)
            norm0 = np.max(np.abs(vals * mask))
            h = HistorySegment(dt_f, vals / norm0, slopes / norm0, lags)
            run = simulate_variational(topology, tau, h, P, dt_f, dtab, atab)
            nxt = run.history_at(run.t_end)
            vals, slopes = nxt.values, nxt.slopes
            g = np.max(np.abs(vals * mask))
            if deflate:
                pv, _ = _project(vals, slopes, neutral, neutral_slopes, mask)
                g = np.max(np.abs(pv * mask))
            growth[it] = g
            if g == 0.0:
                return -math.inf, growth
        tail = growth[n_iterations // 2 :]
        return float(np.mean(np.log(tail)) / period), growth

    est, growth = iterate(False)
    if est == -math.inf:
        return FloquetEstimate(-math.inf, False, True, growth)
    if abs(est) < 1e-3:
        est, growth = iterate(True)
        return FloquetEstimate(est, True, est == -math.inf, growth)
    return FloquetEstimate(est, False, False, growth)


def _project(vals, slopes, neutral, neutral_slopes, mask):
    """Remove the component along ``neutral`` (sampled L2 inner product)."""
    nn = float(np.sum(neutral * neutral))
    if nn == 0.0:
        return vals, slopes
    c = float(np.sum(vals * neutral * mask)) / nn
    return vals - c * neutral, slopes - c * neutral_slopes


# ----------------------------------------------------------------------------
# report


@dataclass
class EquivalenceReport:
    max_trajectory_deviation: float | None = None
    spectra_matched: bool | None = None
    max_root_pairing_distance: float | None = None
    roots_original: list[complex] = field(default_factory=list)
    roots_reduced: list[complex] = field(default_factory=list)
    mle_original: ExponentEstimate | None = None
    mle_reduced: ExponentEstimate | None = None
    tolerances: dict = field(default_factory=dict)
    timeshifts: list[float] = field(default_factory=list)

    def to_json(self) -> dict:
        out = {
            "max_trajectory_deviation": self.max_trajectory_deviation,
            "spectra_matched": self.spectra_matched,
            "max_root_pairing_distance": self.max_root_pairing_distance,
            "roots_original": [[z.real, z.imag] for z in self.roots_original],
            "roots_reduced": [[z.real, z.imag] for z in self.roots_reduced],
            "mle_original": self.mle_original.to_json() if self.mle_original else None,
            "mle_reduced": self.mle_reduced.to_json() if self.mle_reduced else None,
            "tolerances": dict(self.tolerances),
            "eta": list(self.timeshifts),
        }
        return out
