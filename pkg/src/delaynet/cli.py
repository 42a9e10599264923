"""``delaynet`` command line.

Exit codes: 0 success, 1 domain error (disconnected network, negative
delay, search limit), 2 input/schema/option error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys

import numpy as np

from .dde import HistorySegment, find_equilibrium, simulate
from .equivalence import (
    OrbitError,
    Region,
    compare_spectra,
    estimate_mle,
    transform_state,
    verify_trajectory_correspondence,
)
from .graph import GraphError, delay_sum, essential_delay_count, fundamental_cycles, roundtrip
from .io import DomainError, SchemaError, dumps, load_network, parse_history
from .reduce import (
    ct_relatable,
    greedy_spanning_tree,
    reduce_to_spanning_tree,
    search_reducibility,
)

log = logging.getLogger("delaynet")

DEMOS = {
    "ring3": {
        "nodes": 3,
        "edges": [
            {"id": 1, "source": 1, "target": 2, "delay": 2.0},
            {"id": 2, "source": 2, "target": 3, "delay": 3.0},
            {"id": 3, "source": 3, "target": 1, "delay": 4.0},
        ],
    },
    "pair": {
        "nodes": 2,
        "edges": [
            {"id": 1, "source": 1, "target": 2, "delay": 2.0},
            {"id": 2, "source": 2, "target": 1, "delay": 3.0},
        ],
    },
    "twocycle": {
        "nodes": 2,
        "edges": [
            {"id": 1, "source": 1, "target": 2, "delay": 1.0},
            {"id": 2, "source": 2, "target": 1, "delay": 1.0},
            {"id": 3, "source": 2, "target": 1, "delay": 2.0},
        ],
    },
    "linear2": {
        "nodes": 2,
        "edges": [
            {"id": 1, "source": 1, "target": 2, "delay": 2.0},
            {"id": 2, "source": 2, "target": 1, "delay": 3.0},
        ],
        "system": {
            "kind": "linear",
            "params": {"d": -1.0},
            "edge_weights": [{"id": 1, "weight": 0.5}, {"id": 2, "weight": -0.5}],
        },
    },
    "mackey_glass": {
        "nodes": 3,
        "edges": [
            {"id": 1, "source": 1, "target": 2, "delay": 0.7},
            {"id": 2, "source": 2, "target": 3, "delay": 1.1},
            {"id": 3, "source": 3, "target": 1, "delay": 0.5},
            {"id": 4, "source": 2, "target": 1, "delay": 1.3},
        ],
        "system": {
            "kind": "mackey_glass",
            "params": {"gamma": 1.0, "beta": 2.0, "n": 4.0},
            "edge_weights": [
                {"id": 1, "weight": 1.0},
                {"id": 2, "weight": 1.0},
                {"id": 3, "weight": 0.6},
                {"id": 4, "weight": 0.4},
            ],
        },
    },
}


class OptionError(ValueError):
    pass


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="delaynet",
        description="Reduce the delays of a delay-coupled network by componentwise "
        "timeshifts and check the reduced network against the original.",
    )
    p.add_argument("--demo", metavar="NAME", choices=sorted(DEMOS),
                   help="write a worked-example network file (to --out or stdout)")
    p.add_argument("--out", metavar="PATH", help="write the result here instead of stdout")
    sub = p.add_subparsers(dest="command", metavar="COMMAND")

    def command(name, help, files=1):
        c = sub.add_parser(name, help=help)
        if files == 2:
            c.add_argument("network", help="first network JSON")
            c.add_argument("other", help="second network JSON")
        else:
            c.add_argument("network", help="network JSON")
        c.add_argument("--out", metavar="PATH", default=argparse.SUPPRESS)
        return c

    def dynamics(c, t_end=50.0, dt=1e-2):
        c.add_argument("--t-end", type=float, default=t_end)
        c.add_argument("--dt", type=float, default=dt)
        c.add_argument("--history", default="const:1",
                       help="const:<v> or csv:<path> (columns t,x1,...,xN; default const:1)")

    def region(c):
        c.add_argument("--re-min", type=float, default=-3.0)
        c.add_argument("--re-max", type=float, default=1.0)
        c.add_argument("--im-min", type=float, default=0.0)
        c.add_argument("--im-max", type=float, default=20.0)
        c.add_argument("--x-guess", type=float, default=1.0,
                       help="starting value for the equilibrium Newton iteration")

    def mle(c):
        c.add_argument("--seed", type=int, default=0,
                       help="seed of the perturbation direction (default 0)")
        c.add_argument("--renorm", type=float, default=1.0, help="renormalization interval")

    command("reduce", "staged spanning-tree reduction")
    command("cycles", "fundamental cycles and roundtrips")
    command("relatable", "are two delay distributions related by timeshifts?", files=2)
    command("essential", "print the essential number of delays C = L - N + 1")
    c = command("reducibility", "search a timeshift leaving at most M distinct delays")
    c.add_argument("--m", type=int, required=True)
    c.add_argument("--tol", type=float, default=1e-9)
    c.add_argument("--max-edges", type=int, default=14,
                   help="refuse networks with more edges (the search is exponential)")
    c = command("simulate", "integrate the network, CSV output")
    dynamics(c)
    c = command("spectrum", "characteristic roots of the original and reduced network")
    region(c)
    c = command("verify", "trajectory, spectrum and exponent comparison")
    dynamics(c)
    region(c)
    mle(c)
    c = command("mle", "maximal Lyapunov exponent of the original and reduced network")
    dynamics(c, t_end=200.0)
    mle(c)
    return p


def _check_options(args) -> None:
    if getattr(args, "dt", 1.0) <= 0:
        raise OptionError("--dt must be positive")
    if getattr(args, "t_end", 0.0) < 0:
        raise OptionError("--t-end must be nonnegative")
    if getattr(args, "m", 0) < 0:
        raise OptionError("--m must be nonnegative")
    if getattr(args, "tol", 1.0) <= 0:
        raise OptionError("--tol must be positive")
    if getattr(args, "renorm", 1.0) <= 0:
        raise OptionError("--renorm must be positive")
    if hasattr(args, "re_min"):
        if not args.re_min < args.re_max:
            raise OptionError("--re-min must be smaller than --re-max")
        if not args.im_min < args.im_max:
            raise OptionError("--im-min must be smaller than --im-max")


def _system(net, command):
    if net.system is None:
        raise SchemaError("system", f"missing field (required by {command})")
    return net.system


def _history(args, net, lags=None):
    lags = net.tau.node_lags() if lags is None else lags
    return parse_history(args.history, lags, args.dt, net.topology.node_count)


def _region(args) -> Region:
    return Region(args.re_min, args.re_max, args.im_min, args.im_max)


def _equilibrium(args, net, system):
    guess = np.full(net.topology.node_count, args.x_guess)
    return find_equilibrium(net.topology, system, guess)


def _spectra(args, net, system, reduction):
    xbar = _equilibrium(args, net, system)
    matched, dist, a, b = compare_spectra(
        net.topology, net.tau, system, xbar, _region(args), reduction.reduced
    )
    return xbar, matched, dist, a, b


def _mle_pair(args, net, system, reduction):
    x0 = _history(args, net)
    orig = estimate_mle(net.topology, net.tau, system, x0, args.t_end,
                        renorm_interval=args.renorm, seed=args.seed)
    y0 = transform_state(x0, net.topology, net.tau, reduction.timeshifts, system)
    red = estimate_mle(net.topology, reduction.reduced, system, y0, args.t_end,
                       renorm_interval=args.renorm, seed=args.seed)
    return orig, red


def run(args) -> str:
    """Execute a parsed command and return its output text."""
    net = load_network(args.network)
    top, tau = net.topology, net.tau
    cmd = args.command
    if cmd == "essential":
        top.require_connected()
        return f"{essential_delay_count(top)}\n"
    if cmd == "reduce":
        return dumps(reduce_to_spanning_tree(tau).to_json())
    if cmd == "cycles":
        top.require_connected()
        tree = greedy_spanning_tree(top, tau)
        cycles = [
            {
                "edges": list(c.edges),
                "signs": [int(s) for s in c.signs],
                "nodes": list(c.nodes),
                "delay_sum": delay_sum(c, tau),
                "roundtrip": roundtrip(c, tau),
            }
            for c in fundamental_cycles(top, tree)
        ]
        return dumps({"tree_edges": list(tree.edges), "cycles": cycles})
    if cmd == "relatable":
        other = load_network(args.other)
        if other.topology != top:
            raise DomainError(
                f"{args.other}: topology differs from {args.network}; "
                "only delays on the same edge list can be compared"
            )
        ok, eta = ct_relatable(tau, other.tau)
        return dumps({"relatable": ok, "eta": None if eta is None else list(eta.shifts)})
    if cmd == "reducibility":
        if top.edge_count > args.max_edges:
            raise DomainError(
                f"--max-edges: network has {top.edge_count} edges, limit is {args.max_edges}"
            )
        out = search_reducibility(tau, m=args.m, tol=args.tol, guard=args.max_edges)
        return dumps(out.to_json())
    system = _system(net, cmd)
    system.check(top)
    if cmd == "simulate":
        traj = simulate(top, tau, system, _history(args, net), args.t_end, args.dt)
        t, x = traj.solution()
        rows = ["t," + ",".join(f"x{j}" for j in range(1, top.node_count + 1))]
        for k in range(t.size):
            rows.append(",".join(format(v, ".17g") for v in (t[k], *x[:, k])))
        return "\n".join(rows) + "\n"
    reduction = reduce_to_spanning_tree(tau)
    if cmd == "spectrum":
        xbar, matched, dist, a, b = _spectra(args, net, system, reduction)
        return dumps({
            "equilibrium": list(xbar),
            "roots_original": a.to_json(),
            "roots_reduced": b.to_json(),
            "spectra_matched": matched,
            "max_root_pairing_distance": dist,
        })
    if cmd == "verify":
        report = verify_trajectory_correspondence(
            top, tau, system, _history(args, net), args.t_end, args.dt, reduction
        )
        xbar, matched, dist, a, b = _spectra(args, net, system, reduction)
        report.spectra_matched = matched
        report.max_root_pairing_distance = dist
        report.roots_original = list(a.roots)
        report.roots_reduced = list(b.roots)
        report.mle_original, report.mle_reduced = _mle_pair(args, net, system, reduction)
        return dumps(report.to_json())
    if cmd == "mle":
        orig, red = _mle_pair(args, net, system, reduction)
        return dumps({"mle_original": orig.to_json(), "mle_reduced": red.to_json(),
                      "eta": list(reduction.timeshifts.shifts)})
    raise OptionError(f"unknown command {cmd!r}")


def _emit(text: str, path: str | None) -> None:
    if path:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def main(argv=None) -> int:
    level = os.environ.get("DELAYNET_LOG", "error").lower()
    logging.basicConfig(
        level={"error": logging.ERROR, "info": logging.INFO, "debug": logging.DEBUG}.get(
            level, logging.ERROR),
        format="%(levelname)s %(name)s: %(message)s",
    )
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.demo:
            _emit(json.dumps(DEMOS[args.demo], indent=2) + "\n", args.out)
            return 0
        if args.command is None:
            parser.print_usage(sys.stderr)
            print("delaynet: error: a command or --demo is required", file=sys.stderr)
            return 2
        _check_options(args)
        _emit(run(args), args.out)
        return 0
    except (DomainError, GraphError) as exc:
        print(f"delaynet: domain error: {exc}", file=sys.stderr)
        return 1
    except (SchemaError, OptionError) as exc:
        print(f"delaynet: input error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"delaynet: I/O error: {exc}", file=sys.stderr)
        return 2
    except (ArithmeticError, OrbitError, np.linalg.LinAlgError) as exc:
        print(f"delaynet: numerical failure: {exc}", file=sys.stderr)
        return 3
    except ValueError as exc:
        print(f"delaynet: input error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
