"""Command-line experiment runner.

Subcommands: gen-trace (materialize a trace file), run (one policy, N
replications), compare (several configs or policy variants over a shared
trace), report (re-aggregate a run directory). Exit codes: 0 success, 2
configuration error, 3 runtime error.
"""
from __future__ import annotations

import argparse
import dataclasses
import json
import sys

from . import metrics, runner, trace as trace_mod
from .engine import EngineError
from .model import ConfigError, load_cluster, load_profiles


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="splitsim")
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen-trace", help="generate a workload trace file from a run config")
    gen.add_argument("--config", required=True, help="run config JSON (trace must be a spec)")
    gen.add_argument("--trace", required=True, help="output trace path (JSON lines)")
    gen.add_argument("--seed", type=int, default=None, help="override the trace seed")

    run_p = sub.add_parser("run", help="run one policy over a trace")
    run_p.add_argument("--config", required=True)
    run_p.add_argument("--seed", type=int, default=None, help="override the base seed")
    run_p.add_argument("--out", default=None, help="override the output directory")
    run_p.add_argument("--trace", default=None, help="override the trace file path")
    run_p.add_argument("--policy", default=None, help="override the policy")

    cmp_p = sub.add_parser("compare", help="compare policies over a shared trace")
    cmp_p.add_argument(
        "--config", action="append", required=True,
        help="run config JSON; repeat for several configs",
    )
    cmp_p.add_argument(
        "--policy", action="append", default=None,
        help="with a single --config, compare these policy variants of it",
    )
    cmp_p.add_argument("--out", default=None, help="output directory for comparison.csv")
    cmp_p.add_argument("--format", choices=("json", "csv"), default="csv")

    rep = sub.add_parser("report", help="aggregate the replication reports in a run directory")
    rep.add_argument("--out", required=True, help="run directory holding replication_*.report.json")
    rep.add_argument("--format", choices=("json", "csv"), default="json")

    return parser


def _cmd_gen_trace(args) -> int:
    import os

    config = runner.load_run_config(args.config)
    if isinstance(config.trace, str):
        raise ConfigError(f"{args.config}: trace is a file path; nothing to generate")
    spec = config.trace
    if args.seed is not None:
        spec = dataclasses.replace(spec, seed=args.seed)
    cluster = load_cluster(config.cluster)
    profiles = load_profiles(config.profiles)
    workloads = trace_mod.generate(spec, profiles, cluster.interval_s)
    parent = os.path.dirname(args.trace)
    if parent:
        os.makedirs(parent, exist_ok=True)
    trace_mod.save_trace(workloads, args.trace)
    print(f"wrote {len(workloads)} workloads to {args.trace}")
    return 0


def _cmd_run(args) -> int:
    config = runner.load_run_config(args.config)
    if args.seed is not None:
        config.seed = args.seed
    if args.out is not None:
        config.out = args.out
    if args.trace is not None:
        config.trace = args.trace
    if args.policy is not None:
        config.policy = args.policy
        runner.validate_run_config(config)
    result = runner.run(config)
    if config.out is None:
        json.dump(metrics.report_to_dict(result.aggregate), sys.stdout, indent=2)
        sys.stdout.write("\n")
    else:
        print(f"wrote {len(result.reports)} replication reports to {config.out}")
    return 0


def _cmd_compare(args) -> int:
    configs = [runner.load_run_config(path) for path in args.config]
    if args.policy:
        if len(configs) != 1:
            raise ConfigError("--policy variants require exactly one --config")
        base = configs[0]
        configs = []
        for policy in args.policy:
            variant = dataclasses.replace(base, policy=policy)
            runner.validate_run_config(variant)
            configs.append(variant)
    rows = runner.compare(configs, out=args.out, fmt=args.format)
    if args.out is None:
        if args.format == "csv":
            for line in metrics.csv_lines(rows):
                print(line)
        else:
            json.dump([metrics.report_to_dict(r) for r in rows], sys.stdout, indent=2)
            sys.stdout.write("\n")
    else:
        print(f"wrote comparison of {len(rows)} policies to {args.out}")
    return 0


def _cmd_report(args) -> int:
    import glob
    import os

    paths = sorted(glob.glob(os.path.join(args.out, "replication_*.report.json")))
    if not paths:
        raise ConfigError(f"{args.out}: no replication_*.report.json files found")
    reports = []
    for path in paths:
        with open(path, "r", encoding="utf-8") as fh:
            reports.append(metrics.report_from_dict(json.load(fh)))
    agg = metrics.aggregate(reports)
    if args.format == "json":
        json.dump(metrics.report_to_dict(agg), sys.stdout, indent=2)
        sys.stdout.write("\n")
    else:
        for line in metrics.csv_lines([agg]):
            print(line)
    return 0


_COMMANDS = {
    "gen-trace": _cmd_gen_trace,
    "run": _cmd_run,
    "compare": _cmd_compare,
    "report": _cmd_report,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2
    except (EngineError, KeyError, ValueError, OSError, RuntimeError) as e:
        print(f"runtime error: {e}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
