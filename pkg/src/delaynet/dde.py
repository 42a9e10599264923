"""Method-of-steps integration of delay-coupled scalar node networks.

Every node obeys

    x_j'(t) = f_j(x_j(t), u_j(t)),   u_j(t) = sum_{l in I_j} a_l x_{s(l)}(t - tau(l))

on a uniform grid of step ``dt`` with classical RK4.  Delayed values are
read by cubic Hermite interpolation of the stored samples and their
derivatives, so lags need not be multiples of ``dt``.  A zero lag reads the
source's current RK stage value, which makes the scheme plain RK4 for an
undelayed coupling.
"""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from numba import njit

from .graph import DelayDistribution, NetworkTopology

__all__ = [
    "DivergenceError",
    "ConvergenceError",
    "SystemDefinition",
    "HistorySegment",
    "Trajectory",
    "simulate",
    "find_equilibrium",
    "value_at",
    "DIVERGENCE_LIMIT",
]

log = logging.getLogger(__name__)

DIVERGENCE_LIMIT = 1e12
LINEAR, MACKEY_GLASS, VARIATIONAL = 0, 1, 2
KINDS = {"linear": LINEAR, "mackey_glass": MACKEY_GLASS}
_SNAP = 1e-9


class DivergenceError(ArithmeticError):
    """A state left the finite range during integration."""


class ConvergenceError(ArithmeticError):
    """An iterative solver ran out of iterations."""


@dataclass(frozen=True)
class SystemDefinition:
    """Node dynamics and coupling weights.

    ``kind`` is ``"linear"`` (``f = d x + u``) or ``"mackey_glass"``
    (``f = -gamma x + beta u / (1 + |u|^n)``).  ``params`` maps parameter
    names to per-node arrays; ``weights`` holds ``a_l`` by edge id order.
    """

    kind: str
    params: dict[str, np.ndarray]
    weights: np.ndarray

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown system kind {self.kind!r}; expected one of {sorted(KINDS)}")
        names = {"linear": ("d",), "mackey_glass": ("gamma", "beta", "n")}[self.kind]
        extra = set(self.params) - set(names)
        if extra:
            raise ValueError(f"unknown parameters for {self.kind}: {sorted(extra)}")
        missing = set(names) - set(self.params)
        if missing:
            raise ValueError(f"missing parameters for {self.kind}: {sorted(missing)}")
        w = np.array(self.weights, dtype=float).reshape(-1)
        if not np.all(np.isfinite(w)):
            raise ValueError(f"edge {int(np.flatnonzero(~np.isfinite(w))[0]) + 1}: weight is not finite")
        params = {k: np.array(v, dtype=float).reshape(-1) for k, v in self.params.items()}
        for k, v in params.items():
            if not np.all(np.isfinite(v)):
                raise ValueError(f"parameter {k} is not finite")
        if self.kind == "mackey_glass":
            if np.any(params["gamma"] <= 0):
                raise ValueError("mackey_glass needs gamma > 0")
            if np.any(params["n"] < 1):
                raise ValueError("mackey_glass needs n >= 1")
        w.flags.writeable = False
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "params", params)

    @classmethod
    def linear(cls, topology: NetworkTopology, d=0.0, weights=1.0) -> "SystemDefinition":
        return cls(
            "linear",
            {"d": np.broadcast_to(np.asarray(d, float), (topology.node_count,))},
            np.broadcast_to(np.asarray(weights, float), (topology.edge_count,)),
        )

    @classmethod
    def mackey_glass(
        cls, topology: NetworkTopology, gamma=1.0, beta=2.0, n=4.0, weights=1.0
    ) -> "SystemDefinition":
        shape = (topology.node_count,)
        return cls(
            "mackey_glass",
            {
                "gamma": np.broadcast_to(np.asarray(gamma, float), shape),
                "beta": np.broadcast_to(np.asarray(beta, float), shape),
                "n": np.broadcast_to(np.asarray(n, float), shape),
            },
            np.broadcast_to(np.asarray(weights, float), (topology.edge_count,)),
        )

    def check(self, topology: NetworkTopology) -> None:
        if self.weights.size != topology.edge_count:
            raise ValueError(f"expected {topology.edge_count} edge weights, got {self.weights.size}")
        for k, v in self.params.items():
            if v.size != topology.node_count:
                raise ValueError(f"parameter {k}: expected {topology.node_count} values, got {v.size}")

    def node_params(self) -> np.ndarray:
        """``3 x N`` parameter table in the layout the kernel expects."""
        if self.kind == "linear":
            d = self.params["d"]
            return np.vstack([d, np.zeros_like(d), np.zeros_like(d)])
        return np.vstack([self.params["gamma"], self.params["beta"], self.params["n"]])

    def coupling_input(self, topology: NetworkTopology, x: np.ndarray) -> np.ndarray:
        """``u_j`` for delay-free arguments ``x``."""
        u = np.zeros(topology.node_count)
        np.add.at(u, topology.targets, self.weights * x[topology.sources])
        return u

    def rhs(self, topology: NetworkTopology, x: np.ndarray, u: np.ndarray | None = None) -> np.ndarray:
        """``f(x, u)``; ``u`` defaults to the delay-free coupling input."""
        if u is None:
            u = self.coupling_input(topology, x)
        if self.kind == "linear":
            return self.params["d"] * x + u
        p = self.params
        return -p["gamma"] * x + p["beta"] * u / (1.0 + np.abs(u) ** p["n"])

    def jacobians(self, topology: NetworkTopology, xbar: np.ndarray):
        """Partial derivatives at a constant state.

        Returns ``(diag, edge)``: ``diag[j] = df_j/dx_j`` and
        ``edge[l] = df_{t(l)}/dx_{s(l)}`` through the delayed argument.
        """
        if self.kind == "linear":
            return self.params["d"].copy(), self.weights.copy()
        p = self.params
        u = self.coupling_input(topology, xbar)
        gprime = mg_gain_slope(u, p["n"]) * p["beta"]
        return -p["gamma"].copy(), self.weights * gprime[topology.targets]

    def to_json(self, topology: NetworkTopology) -> dict:
        return {
            "kind": self.kind,
            "params": {k: [float(x) for x in v] for k, v in sorted(self.params.items())},
            "edge_weights": [
                {"id": k, "weight": float(w)} for k, w in zip(topology.edge_ids, self.weights)
            ],
        }


def mg_gain_slope(u, n):
    """Derivative of ``u / (1 + |u|^n)``."""
    a = np.abs(u) ** n
    return (1.0 + (1.0 - n) * a) / (1.0 + a) ** 2


@dataclass(frozen=True)
class HistorySegment:
    """Initial functions on ``[-r_j, 0]`` sampled on the grid ``-k*dt``.

    ``values[j, i]`` and ``slopes[j, i]`` belong to time ``(i - K) * dt``
    where ``K = values.shape[1] - 1``; row ``j`` only has to be meaningful
    on ``[-lags[j], 0]``.  Samples are interpolated with cubic Hermite
    polynomials.  ``slopes`` are right derivatives; ``slopes_left`` may
    hold different left derivatives where the function has a kink.
    """

    dt: float
    values: np.ndarray
    slopes: np.ndarray
    lags: np.ndarray
    slopes_left: np.ndarray | None = None

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        s = np.array(self.slopes, dtype=float)
        sl = s.copy() if self.slopes_left is None else np.array(self.slopes_left, dtype=float)
        lags = np.array(self.lags, dtype=float).reshape(-1)
        if v.ndim != 2 or v.shape != s.shape or v.shape != sl.shape:
            raise ValueError("history values and slopes must be matching 2-D arrays")
        if v.shape[0] != lags.size:
            raise ValueError("history needs one lag per node")
        if not (np.all(np.isfinite(v)) and np.all(np.isfinite(s)) and np.all(np.isfinite(sl))):
            raise ValueError("history samples must be finite")
        if self.dt <= 0:
            raise ValueError("history dt must be positive")
        if (v.shape[1] - 1) * self.dt < lags.max(initial=0.0) - _SNAP * self.dt:
            raise ValueError("history grid does not cover the required lags")
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "slopes", s)
        object.__setattr__(self, "slopes_left", sl)
        object.__setattr__(self, "lags", lags)

    @property
    def node_count(self) -> int:
        return self.values.shape[0]

    @property
    def depth(self) -> int:
        return self.values.shape[1] - 1

    @staticmethod
    def grid_depth(lags, dt: float) -> int:
        """Samples needed before 0 (at least one, for extrapolation)."""
        r = float(np.max(lags, initial=0.0))
        return max(1, int(math.ceil(r / dt - _SNAP)))

    @classmethod
    def constant(cls, values, lags, dt: float) -> "HistorySegment":
        lags = np.asarray(lags, float)
        x = np.asarray(values, float).reshape(-1)
        if x.size == 1:
            x = np.full(lags.size, float(x[0]))
        k = cls.grid_depth(lags, dt)
        v = np.repeat(x[:, None], k + 1, axis=1)
        return cls(dt, v, np.zeros_like(v), lags)

    @classmethod
    def from_function(
        cls,
        func: Callable[[np.ndarray], np.ndarray],
        lags,
        dt: float,
        derivative: Callable[[np.ndarray], np.ndarray] | None = None,
    ) -> "HistorySegment":
        """Sample ``func(t) -> (N, len(t))`` on the grid.

        Slopes come from ``derivative`` when given, from central differences
        otherwise.
        """
        lags = np.asarray(lags, float)
        k = cls.grid_depth(lags, dt)
        t = (np.arange(k + 1) - k) * dt
        v = np.atleast_2d(np.asarray(func(t), float))
        if derivative is not None:
            s = np.atleast_2d(np.asarray(derivative(t), float))
        else:
            h = dt * 1e-3
            s = (np.atleast_2d(func(t + h)) - np.atleast_2d(func(t - h))) / (2 * h)
        return cls(dt, np.broadcast_to(v, (lags.size, k + 1)).copy(),
                   np.broadcast_to(s, (lags.size, k + 1)).copy(), lags)

    @classmethod
    def from_samples(cls, values, lags, dt: float) -> "HistorySegment":
        """Slopes by finite differences of the samples (one-sided at the ends)."""
        v = np.atleast_2d(np.asarray(values, float))
        s = np.gradient(v, dt, axis=1, edge_order=2) if v.shape[1] > 2 else np.zeros_like(v)
        return cls(dt, v, s, lags)

    def times(self) -> np.ndarray:
        return (np.arange(self.depth + 1) - self.depth) * self.dt

    def value_at(self, node: int, t: float) -> float:
        """Hermite interpolant of node ``node`` (1-based) at ``t`` in ``[-r_j, 0]``."""
        j = node - 1
        if t > _SNAP * self.dt or t < -self.lags[j] - _SNAP * self.dt:
            raise ValueError(f"t={t} outside history range of node {node}")
        return float(_hermite_eval(self.values[j], self.slopes_left[j], self.slopes[j], self.dt,
                                   self.depth, t))


@dataclass(frozen=True)
class Trajectory:
    """Grid solution including its history.

    Column ``i`` of ``values`` is time ``t0 + (i - offset) * dt``.  ``dleft``
    and ``dright`` are one-sided derivatives; they differ only at ``t0``,
    where the history meets the solution.
    """

    t0: float
    dt: float
    offset: int
    values: np.ndarray
    dleft: np.ndarray
    dright: np.ndarray
    lags: np.ndarray
    tau: DelayDistribution | None = field(default=None, repr=False)
    system: SystemDefinition | None = field(default=None, repr=False)

    @property
    def node_count(self) -> int:
        return self.values.shape[0]

    @property
    def steps(self) -> int:
        return self.values.shape[1] - 1 - self.offset

    @property
    def t_end(self) -> float:
        return self.t0 + self.steps * self.dt

    def times(self) -> np.ndarray:
        return self.t0 + (np.arange(self.values.shape[1]) - self.offset) * self.dt

    def solution(self) -> tuple[np.ndarray, np.ndarray]:
        """Grid times from ``t0`` on and the matching ``N x K`` samples."""
        return self.times()[self.offset:], self.values[:, self.offset:]

    def index_of(self, t: float) -> int:
        """Column of grid time ``t`` (must lie on the grid)."""
        s = (t - self.t0) / self.dt
        i = round(s)
        if abs(s - i) > 1e-6:
            raise ValueError(f"t={t} is not a grid point")
        return i + self.offset

    def history_at(self, t: float, lags=None) -> HistorySegment:
        """State at grid time ``t`` as a history segment for a restart."""
        lags = self.lags if lags is None else np.asarray(lags, float)
        i = self.index_of(t)
        k = HistorySegment.grid_depth(lags, self.dt)
        if i - k < 0:
            raise ValueError(f"trajectory does not reach back far enough from t={t}")
        sl = slice(i - k, i + 1)
        return HistorySegment(self.dt, self.values[:, sl].copy(), self.dright[:, sl].copy(),
                              lags, self.dleft[:, sl].copy())

    def value_at(self, node: int, t: float) -> float:
        return value_at(self, node, t)

    def derivative_at(self, node: int, t: float) -> float:
        """Derivative of the Hermite interpolant (left derivative at grid points)."""
        j = node - 1
        self._check(j, t)
        s = (t - self.t0) / self.dt + self.offset
        a = int(math.floor(s))
        th = s - a
        if abs(th) < _SNAP and a > 0:
            return float(self.dleft[j, a])
        if abs(th - 1.0) < _SNAP:
            return float(self.dleft[j, a + 1])
        a = min(a, self.values.shape[1] - 2)
        th = s - a
        x0, x1 = self.values[j, a], self.values[j, a + 1]
        d0, d1 = self.dright[j, a], self.dleft[j, a + 1]
        dt = self.dt
        return float(
            (6 * th * th - 6 * th) * (x0 - x1) / dt
            + (3 * th * th - 4 * th + 1) * d0
            + (3 * th * th - 2 * th) * d1
        )

    def _check(self, j, t):
        lo = self.t0 - self.lags[j] - _SNAP * self.dt
        hi = self.t_end + _SNAP * self.dt
        if not lo <= t <= hi:
            raise ValueError(
                f"t={t} outside stored range [{self.t0 - self.lags[j]}, {self.t_end}] of node {j + 1}"
            )

    def to_csv(self, path) -> None:
        """``t,x1,...,xN`` rows from ``t0`` on, 17 significant digits."""
        t, x = self.solution()
        header = ",".join(["t"] + [f"x{j + 1}" for j in range(self.node_count)])
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(header + "\n")
            for i in range(t.size):
                fh.write(",".join(format(v, ".17g") for v in (t[i], *x[:, i])) + "\n")


def value_at(trajectory: Trajectory, node: int, t: float) -> float:
    """Cubic Hermite value of ``node`` (1-based) at time ``t``; exact on the grid."""
    if not 1 <= node <= trajectory.node_count:
        raise ValueError(f"node {node} outside 1..{trajectory.node_count}")
    j = node - 1
    trajectory._check(j, t)
    s = (t - trajectory.t0) / trajectory.dt + trajectory.offset
    i = round(s)
    if abs(s - i) <= _SNAP:
        return float(trajectory.values[j, i])
    a = min(int(math.floor(s)), trajectory.values.shape[1] - 2)
    return float(
        _hermite(
            s - a,
            trajectory.values[j, a],
            trajectory.dright[j, a],
            trajectory.values[j, a + 1],
            trajectory.dleft[j, a + 1],
            trajectory.dt,
        )
    )


def _hermite(th, x0, d0, x1, d1, dt):
    th2 = th * th
    th3 = th2 * th
    return (
        (2 * th3 - 3 * th2 + 1) * x0
        + (th3 - 2 * th2 + th) * dt * d0
        + (-2 * th3 + 3 * th2) * x1
        + (th3 - th2) * dt * d1
    )


def _hermite_eval(x, dl, dr, dt, offset, t):
    s = t / dt + offset
    i = round(s)
    if abs(s - i) <= _SNAP:
        return x[i]
    a = min(int(math.floor(s)), x.size - 2)
    return _hermite(s - a, x[a], dr[a], x[a + 1], dl[a + 1], dt)


# ----------------------------------------------------------------------------
# kernel


@njit(cache=True)
def _hermite_nb(th, x0, d0, x1, d1, dt):
    th2 = th * th
    th3 = th2 * th
    return (
        (2.0 * th3 - 3.0 * th2 + 1.0) * x0
        + (th3 - 2.0 * th2 + th) * dt * d0
        + (-2.0 * th3 + 3.0 * th2) * x1
        + (th3 - th2) * dt * d1
    )


@njit(cache=True)
def _rhs_nb(kind, x, u, par, step2, dtab, period2):
    n = x.size
    out = np.empty(n)
    for j in range(n):
        if kind == 0:
            out[j] = par[0, j] * x[j] + u[j]
        elif kind == 1:
            a = abs(u[j]) ** par[2, j]
            out[j] = -par[0, j] * x[j] + par[1, j] * u[j] / (1.0 + a)
        else:
            out[j] = dtab[j, step2 % period2] * x[j] + u[j]
    return out


@njit(cache=True)
def _inputs_nb(kind, X, DL, DR, n, stage, xs, src, tgt, w, ioff, theta, inst, dt,
               atab, step2, period2):
    L = src.size
    u = np.zeros(xs.size)
    for l in range(L):
        s = src[l]
        if inst[l]:
            val = xs[s]
        else:
            a = n + ioff[l, stage]
            th = theta[l, stage]
            if a + 1 > n:
                # lag shorter than the stage offset: extrapolate the last step
                a = n - 1
                th = th + 1.0
            if th == 1.0:
                val = X[s, a + 1]
            else:
                val = _hermite_nb(th, X[s, a], DR[s, a], X[s, a + 1], DL[s, a + 1], dt)
        if kind == 2:
            u[tgt[l]] += atab[l, step2 % period2] * val
        else:
            u[tgt[l]] += w[l] * val
    return u


@njit(cache=True)
def _integrate_nb(kind, X, DL, DR, h0, steps, dt, src, tgt, w, ioff, theta, inst, par,
                  dtab, atab, period2, limit):
    """Advance ``steps`` RK4 steps; returns the number completed."""
    N = X.shape[0]
    xs = X[:, h0].copy()
    u = _inputs_nb(kind, X, DL, DR, h0, 0, xs, src, tgt, w, ioff, theta, inst, dt, atab, 0, period2)
    DR[:, h0] = _rhs_nb(kind, xs, u, par, 0, dtab, period2)
    for k in range(steps):
        n = h0 + k
        x0 = X[:, n].copy()
        k1 = DR[:, n].copy()
        xs = x0 + 0.5 * dt * k1
        u = _inputs_nb(kind, X, DL, DR, n, 1, xs, src, tgt, w, ioff, theta, inst, dt, atab, 2 * k + 1, period2)
        k2 = _rhs_nb(kind, xs, u, par, 2 * k + 1, dtab, period2)
        xs = x0 + 0.5 * dt * k2
        u = _inputs_nb(kind, X, DL, DR, n, 1, xs, src, tgt, w, ioff, theta, inst, dt, atab, 2 * k + 1, period2)
        k3 = _rhs_nb(kind, xs, u, par, 2 * k + 1, dtab, period2)
        xs = x0 + dt * k3
        u = _inputs_nb(kind, X, DL, DR, n, 2, xs, src, tgt, w, ioff, theta, inst, dt, atab, 2 * k + 2, period2)
        k4 = _rhs_nb(kind, xs, u, par, 2 * k + 2, dtab, period2)
        x1 = x0 + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        for j in range(N):
            if not (abs(x1[j]) <= limit):
                return k
        X[:, n + 1] = x1
        # provisional left slope so that a lag below dt can read it
        DL[:, n + 1] = k4
        DR[:, n + 1] = k4
        u = _inputs_nb(kind, X, DL, DR, n + 1, 0, x1, src, tgt, w, ioff, theta, inst, dt, atab, 2 * k + 2, period2)
        f1 = _rhs_nb(kind, x1, u, par, 2 * k + 2, dtab, period2)
        DL[:, n + 1] = f1
        DR[:, n + 1] = f1
    return steps


def lag_table(delays: np.ndarray, dt: float):
    """Per edge and stage ``c in (0, 1/2, 1)``: column offset, Hermite weight, zero-lag flag.

    The delayed argument of stage ``c`` in step ``n`` sits at grid position
    ``n + c - tau/dt``, between columns ``n + ioff`` and ``n + ioff + 1`` at
    fraction ``theta`` in ``(0, 1]``.
    """
    L = delays.size
    ioff = np.zeros((L, 3), dtype=np.int64)
    theta = np.ones((L, 3))
    inst = delays == 0.0
    for l in range(L):
        for i, c in enumerate((0.0, 0.5, 1.0)):
            s = c - delays[l] / dt
            r = round(s)
            if abs(s - r) <= _SNAP:
                s = float(r)
            a = math.ceil(s) - 1
            ioff[l, i] = a
            theta[l, i] = s - a
    return ioff, theta, inst


def _prepare(topology, tau, system, history, dt):
    if tau.topology != topology:
        raise ValueError("delay distribution belongs to a different topology")
    tau.require_nonnegative()
    system.check(topology)
    if dt <= 0:
        raise ValueError("dt must be positive")
    if history.node_count != topology.node_count:
        raise ValueError("history node count does not match the network")
    if abs(history.dt - dt) > 1e-12 * dt:
        raise ValueError(f"history grid step {history.dt} differs from dt={dt}")
    lags = tau.node_lags()
    need = HistorySegment.grid_depth(lags, dt)
    if history.depth < need:
        raise ValueError(f"history covers {history.depth} steps, lags need {need}")
    pos = tau.values[tau.values > 0]
    if pos.size and pos.min() < dt:
        warnings.warn(
            f"dt={dt} exceeds the smallest positive delay {pos.min()}; "
            "delayed values are extrapolated within a step",
            RuntimeWarning,
            stacklevel=3,
        )
    return lags


def _run(kind, topology, delays, history, steps, dt, par, weights, dtab=None, atab=None,
         period2=1):
    h0 = history.depth
    N = topology.node_count
    X = np.empty((N, h0 + steps + 1))
    DL = np.empty_like(X)
    DR = np.empty_like(X)
    X[:, : h0 + 1] = history.values
    DL[:, : h0 + 1] = history.slopes_left
    DR[:, : h0 + 1] = history.slopes
    ioff, theta, inst = lag_table(np.asarray(delays, float), dt)
    if dtab is None:
        dtab = np.zeros((N, 1))
        atab = np.zeros((topology.edge_count, 1))
    done = _integrate_nb(
        kind, X, DL, DR, h0, steps, dt,
        topology.sources.astype(np.int64), topology.targets.astype(np.int64),
        np.asarray(weights, float), ioff, theta, inst, par, dtab, atab, period2,
        DIVERGENCE_LIMIT,
    )
    if done < steps:
        t = (done + 1) * dt
        raise DivergenceError(f"state exceeded {DIVERGENCE_LIMIT:g} at t={t:.6g}")
    return X, DL, DR


def simulate(
    topology: NetworkTopology,
    tau: DelayDistribution,
    system: SystemDefinition,
    history: HistorySegment,
    t_end: float,
    dt: float,
    t0: float = 0.0,
) -> Trajectory:
    """Integrate from ``t0`` to ``t_end`` (rounded to whole steps)."""
    if t_end < t0:
        raise ValueError("t_end must not precede t0")
    lags = _prepare(topology, tau, system, history, dt)
    steps = int(round((t_end - t0) / dt))
    X, DL, DR = _run(KINDS[system.kind], topology, tau.values, history, steps, dt,
                     system.node_params(), system.weights)
    return Trajectory(t0, dt, history.depth, X, DL, DR, lags, tau, system)


def simulate_variational(
    topology: NetworkTopology,
    tau: DelayDistribution,
    history: HistorySegment,
    steps: int,
    dt: float,
    diag_table: np.ndarray,
    edge_table: np.ndarray,
) -> Trajectory:
    """Linear time-varying run ``xi_j' = d_j(t) xi_j + sum a_l(t) xi_s(t - tau)``.

    Coefficient tables are sampled on the half-step grid (column ``2k``
    is ``t = k dt``) and read periodically with their column count.
    """
    lags = tau.node_lags()
    period2 = diag_table.shape[1]
    par = np.zeros((3, topology.node_count))
    X, DL, DR = _run(VARIATIONAL, topology, tau.values, history, steps, dt, par,
                     np.zeros(topology.edge_count), np.ascontiguousarray(diag_table, float),
                     np.ascontiguousarray(edge_table, float), period2)
    return Trajectory(0.0, dt, history.depth, X, DL, DR, lags, tau, None)


def find_equilibrium(
    topology: NetworkTopology,
    system: SystemDefinition,
    initial_guess,
    tol: float = 1e-12,
    max_iter: int = 100,
) -> np.ndarray:
    """Damped Newton on ``f(x, u(x)) = 0`` with all delays dropped.

    Delays do not enter this system, so the result is an equilibrium of
    every delay distribution on ``topology``.
    """
    system.check(topology)
    x = np.array(initial_guess, dtype=float).reshape(-1)
    if x.size == 1:
        x = np.full(topology.node_count, float(x[0]))
    N = topology.node_count

    def residual(y):
        return system.rhs(topology, y)

    r = residual(x)
    for _ in range(max_iter):
        norm = np.max(np.abs(r), initial=0.0)
        if norm <= tol:
            return x
        diag, edge = system.jacobians(topology, x)
        J = np.diag(diag)
        np.add.at(J, (topology.targets, topology.sources), edge)
        try:
            step = np.linalg.solve(J, -r)
        except np.linalg.LinAlgError:
            step = np.linalg.lstsq(J, -r, rcond=None)[0]
        lam = 1.0
        while lam > 1e-10:
            trial = x + lam * step
            rt = residual(trial)
            if np.max(np.abs(rt)) < (1 - 1e-4 * lam) * norm:
                break
            lam *= 0.5
        x, r = trial, rt
    if np.max(np.abs(r), initial=0.0) <= tol:
        return x
    raise ConvergenceError(
        f"equilibrium search did not converge in {max_iter} iterations "
        f"(residual {np.max(np.abs(r)):.3g})"
    )
