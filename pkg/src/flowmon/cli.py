"""Command line front end.

Subcommands: ``run`` (one plan, one filtered run), ``compare``
(optimized plan against the even-split baseline), ``gen-topology``
(random routed network as CSV), and ``gen-trace`` (simulate a trace
from a model JSON).  Exit codes: 0 on success, 2 for configuration or
input errors, 3 when the exact solver refuses an oversized instance,
4 when the filter fails numerically.
"""

from __future__ import annotations

import argparse
import dataclasses
import sys

from .errors import ConfigError, FilterNumericalError, SolverSizeError
from .flow_dynamics import load_model_json, save_trace_csv, simulate
from .harness import ExperimentConfig, compare, run_experiment, write_outputs
from .net_model import save_routing_csv, synthetic_topology

__all__ = ["main", "entrypoint"]


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="flowmon",
        description="Optimal packet-sampling plans and Kalman-filter traffic estimation.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run one experiment with the optimized plan")
    compare_p = sub.add_parser(
        "compare", help="run the optimized plan against the even-split baseline"
    )
    for p in (run, compare_p):
        p.add_argument("--config", required=True, help="experiment config (.json or .toml)")
        p.add_argument("--out", required=True, help="directory for result files")
        p.add_argument("--seed", type=int, default=None, help="override the config seed")

    topo = sub.add_parser("gen-topology", help="generate a random routed network CSV")
    topo.add_argument("--nodes", type=int, default=9)
    topo.add_argument("--links", type=int, default=26)
    topo.add_argument("--flows", type=int, default=72)
    topo.add_argument("--seed", type=int, default=0)
    topo.add_argument("--out", required=True, help="output routing CSV path")

    trace = sub.add_parser("gen-trace", help="simulate a traffic trace from a model JSON")
    trace.add_argument("--model", required=True, help="model parameters (JSON)")
    trace.add_argument("--steps", type=int, required=True, help="number of time slots")
    trace.add_argument("--seed", type=int, default=0)
    trace.add_argument("--out", required=True, help="output trace CSV path")
    return parser


def _cmd_experiment(args, with_baseline: bool) -> int:
    cfg = ExperimentConfig.from_file(args.config)
    if args.seed is not None:
        cfg = dataclasses.replace(cfg, seed=args.seed)
    result = compare(cfg) if with_baseline else run_experiment(cfg)
    write_outputs(result, args.out)
    if with_baseline:
        print(f"rmse_time_average_opt: {result.optimal.rmse_time_average!r}")
        print(f"rmse_time_average_naive: {result.baseline.rmse_time_average!r}")
        print(f"percent_reduction: {result.percent_reduction!r}")
    else:
        print(f"rmse_time_average: {result.optimal.rmse_time_average!r}")
    return 0


def _cmd_gen_topology(args) -> int:
    routing = synthetic_topology(
        n_nodes=args.nodes, n_links=args.links, n_flows=args.flows, seed=args.seed
    )
    save_routing_csv(routing, args.out)
    print(f"wrote {args.out}: {routing.n_links} links, {routing.n_flows} flows")
    return 0


def _cmd_gen_trace(args) -> int:
    if args.steps < 1:
        raise ConfigError("--steps must be >= 1")
    model = load_model_json(args.model)
    trace = simulate(model, args.steps, args.seed)
    save_trace_csv(trace, args.out)
    print(f"wrote {args.out}: {trace.shape[0]} slots, {trace.shape[1]} flows")
    return 0


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "run":
            return _cmd_experiment(args, with_baseline=False)
        if args.command == "compare":
            return _cmd_experiment(args, with_baseline=True)
        if args.command == "gen-topology":
            return _cmd_gen_topology(args)
        return _cmd_gen_trace(args)
    except SolverSizeError as e:
        print(f"error: {e}", file=sys.stderr)
        return 3
    except FilterNumericalError as e:
        print(f"error: {e}", file=sys.stderr)
        return 4
    except (ConfigError, ValueError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


def entrypoint() -> None:
    sys.exit(main())
