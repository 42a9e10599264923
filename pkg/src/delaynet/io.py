"""Network files, history specs and deterministic JSON output."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.interpolate import CubicSpline

from .dde import HistorySegment, SystemDefinition
from .graph import DelayDistribution, NetworkTopology

__all__ = [
    "SchemaError",
    "DomainError",
    "Network",
    "parse_network",
    "load_network",
    "network_to_json",
    "dumps",
    "parse_history",
]


class SchemaError(ValueError):
    """Malformed input; ``path`` locates the offending field."""

    def __init__(self, path: str, message: str):
        self.path = path
        super().__init__(f"{path}: {message}" if path else message)


class DomainError(ValueError):
    """Well-formed input outside the model's domain (e.g. a negative delay)."""


@dataclass(frozen=True)
class Network:
    topology: NetworkTopology
    tau: DelayDistribution
    system: SystemDefinition | None = None


_TOP = {"nodes", "edges", "system"}
_EDGE = {"id", "source", "target", "delay"}
_SYSTEM = {"kind", "params", "edge_weights"}
_WEIGHT = {"id", "weight"}


def _fields(obj, allowed, required, path):
    if not isinstance(obj, dict):
        raise SchemaError(path, "expected an object")
    for key in obj:
        if key not in allowed:
            raise SchemaError(f"{path}.{key}" if path else key, "unknown field")
    for key in required:
        if key not in obj:
            raise SchemaError(f"{path}.{key}" if path else key, "missing field")


def _int(value, path, low=None):
    if isinstance(value, bool) or not isinstance(value, int):
        raise SchemaError(path, f"expected an integer, got {value!r}")
    if low is not None and value < low:
        raise SchemaError(path, f"must be >= {low}, got {value}")
    return value


def _real(value, path):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise SchemaError(path, f"expected a number, got {value!r}")
    if not math.isfinite(value):
        raise SchemaError(path, "must be finite")
    return float(value)


def parse_network(data: dict) -> Network:
    """Validate a decoded network document.

    Unknown fields, duplicate or non-dense edge ids and out-of-range
    endpoints raise :class:`SchemaError`; negative delays raise
    :class:`DomainError` naming the edge.
    """
    _fields(data, _TOP, ("nodes", "edges"), "")
    n = _int(data["nodes"], "nodes", 1)
    edges = data["edges"]
    if not isinstance(edges, list):
        raise SchemaError("edges", "expected a list")
    seen: dict[int, int] = {}
    triples, delays = [], {}
    for i, e in enumerate(edges):
        p = f"edges[{i}]"
        _fields(e, _EDGE, _EDGE, p)
        k = _int(e["id"], f"{p}.id", 1)
        if k in seen:
            raise SchemaError(f"{p}.id", f"duplicate edge id {k} (also edges[{seen[k]}])")
        seen[k] = i
        s = _int(e["source"], f"{p}.source", 1)
        t = _int(e["target"], f"{p}.target", 1)
        for name, v in (("source", s), ("target", t)):
            if v > n:
                raise SchemaError(f"{p}.{name}", f"node {v} outside 1..{n}")
        d = _real(e["delay"], f"{p}.delay")
        if d < 0:
            raise DomainError(f"edge {k}: negative delay {d!r}")
        triples.append((k, s, t))
        delays[k] = d
    if sorted(seen) != list(range(1, len(edges) + 1)):
        gap = next(k for k in range(1, len(edges) + 1) if k not in seen)
        raise SchemaError("edges", f"edge ids must be 1..{len(edges)}; id {gap} is missing")
    topology = NetworkTopology(n, tuple(triples))
    tau = DelayDistribution.from_mapping(topology, delays)
    system = _parse_system(data["system"], topology) if "system" in data else None
    return Network(topology, tau, system)


def _parse_system(obj, topology: NetworkTopology) -> SystemDefinition:
    _fields(obj, _SYSTEM, ("kind",), "system")
    kind = obj["kind"]
    names = {"linear": ("d",), "mackey_glass": ("gamma", "beta", "n")}
    if kind not in names:
        raise SchemaError("system.kind", f"unknown kind {kind!r}; expected one of {sorted(names)}")
    raw = obj.get("params", {})
    if not isinstance(raw, dict):
        raise SchemaError("system.params", "expected an object")
    params = {}
    for key, value in raw.items():
        p = f"system.params.{key}"
        if key not in names[kind]:
            raise SchemaError(p, f"unknown parameter for {kind}")
        if isinstance(value, list):
            if len(value) != topology.node_count:
                raise SchemaError(p, f"expected {topology.node_count} values, got {len(value)}")
            params[key] = [_real(v, f"{p}[{j}]") for j, v in enumerate(value)]
        else:
            params[key] = [_real(value, p)] * topology.node_count
    defaults = {"d": -1.0, "gamma": 1.0, "beta": 2.0, "n": 4.0}
    for key in names[kind]:
        params.setdefault(key, [defaults[key]] * topology.node_count)
    weights = np.ones(topology.edge_count)
    listed = obj.get("edge_weights", [])
    if not isinstance(listed, list):
        raise SchemaError("system.edge_weights", "expected a list")
    seen = set()
    for i, w in enumerate(listed):
        p = f"system.edge_weights[{i}]"
        _fields(w, _WEIGHT, _WEIGHT, p)
        k = _int(w["id"], f"{p}.id", 1)
        if k > topology.edge_count:
            raise SchemaError(f"{p}.id", f"unknown edge id {k}")
        if k in seen:
            raise SchemaError(f"{p}.id", f"duplicate weight for edge {k}")
        seen.add(k)
        weights[k - 1] = _real(w["weight"], f"{p}.weight")
    try:
        return SystemDefinition(kind, params, weights)
    except ValueError as exc:
        raise DomainError(str(exc)) from None


def load_network(path) -> Network:
    """Read and validate a network file (OSError / SchemaError on failure)."""
    text = Path(path).read_text(encoding="utf-8")
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError("", f"{path}: invalid JSON ({exc.msg} at line {exc.lineno})") from None
    return parse_network(data)


def network_to_json(topology: NetworkTopology, tau: DelayDistribution,
                    system: SystemDefinition | None = None) -> dict:
    out = {
        "nodes": topology.node_count,
        "edges": [
            {"id": k, "source": s, "target": t, "delay": float(d)}
            for (k, s, t), d in zip(topology.edges, tau.values)
        ],
    }
    if system is not None:
        out["system"] = system.to_json(topology)
    return out


def _canonical(obj):
    if isinstance(obj, (float, np.floating)):
        obj = float(obj)
        if math.isnan(obj):
            return None
        if math.isinf(obj):
            return "inf" if obj > 0 else "-inf"
        return obj
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, dict):
        return {str(k): _canonical(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, np.ndarray)):
        return [_canonical(v) for v in obj]
    return obj


def dumps(obj) -> str:
    """Deterministic JSON: sorted keys, floats in shortest round-trip form."""
    return json.dumps(_canonical(obj), sort_keys=True, indent=2, allow_nan=False) + "\n"


def parse_history(source: str, lags, dt: float, node_count: int) -> HistorySegment:
    """``const:<v>`` or ``csv:<path>`` with columns ``t,x1,...,xN``.

    CSV samples are spline-interpolated onto the integration grid; they
    must cover each node's window ``[-r_j, 0]``.
    """
    kind, _, arg = source.partition(":")
    if kind == "const":
        try:
            value = float(arg)
        except ValueError:
            raise SchemaError("--history", f"bad constant {arg!r}") from None
        if not math.isfinite(value):
            raise SchemaError("--history", "constant must be finite")
        return HistorySegment.constant(np.full(node_count, value), lags, dt)
    if kind == "csv":
        with open(arg, newline="", encoding="utf-8") as fh:
            rows = list(csv.reader(fh))
        if not rows:
            raise SchemaError("--history", f"{arg}: empty file")
        header = [h.strip() for h in rows[0]]
        expected = ["t"] + [f"x{j}" for j in range(1, node_count + 1)]
        if header != expected:
            raise SchemaError("--history", f"{arg}: header must be {','.join(expected)}")
        try:
            data = np.array([[float(v) for v in r] for r in rows[1:] if r], dtype=float)
        except ValueError as exc:
            raise SchemaError("--history", f"{arg}: {exc}") from None
        if data.ndim != 2 or data.shape[0] < 2:
            raise SchemaError("--history", f"{arg}: need at least two rows")
        t = data[:, 0]
        if np.any(np.diff(t) <= 0):
            raise SchemaError("--history", f"{arg}: times must increase")
        k = HistorySegment.grid_depth(lags, dt)
        grid = (np.arange(k + 1) - k) * dt
        r = float(np.max(lags, initial=0.0))
        if t[0] > -r + 1e-9 * max(1.0, r) or abs(t[-1]) > 1e-9:
            raise SchemaError("--history", f"{arg}: samples must span [-{r:g}, 0]")
        spline = CubicSpline(t, data[:, 1:], axis=0)
        g = np.clip(grid, t[0], t[-1])
        return HistorySegment(dt, spline(g).T, spline(g, 1).T, lags)
    raise SchemaError("--history", f"expected const:<v> or csv:<path>, got {source!r}")
