"""Experiment orchestration: run configs, the per-interval simulation loop,
replication grids and policy comparisons.

Each interval the loop admits newly arrived workloads into a FIFO queue,
decides a split for each queued workload (bandit policy or forced), asks the
configured scheduler for a placement, dispatches what fits (the rest retry
next interval), steps the engine by one interval, and feeds completions back
to the decider. Runs drain until every admitted workload finishes; workloads
that can never be placed are closed immediately as SLA violations with zero
accuracy.

Reported scheduling time is a deterministic cost model (fixed per-decision
and per-fragment charges), not a wall-clock measurement, so that identical
configs reproduce identical reports byte for byte.
"""
from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field

from . import rng
from .decider import SplitDecider, WorkloadOutcome
from .engine import Engine, FragmentGraph, WorkloadRecord, instantiate
from .metrics import MetricsReport, aggregate, export_comparison, report_to_dict, summarize
from .model import (
    ApplicationProfile,
    ClusterConfig,
    ConfigError,
    SplitDecision,
    Workload,
    compressed_variant,
    load_cluster,
    load_profiles,
)
from .schedulers import SCHEDULERS, feasible_on_empty_cluster
from .trace import TraceSpec, generate, load_trace, spec_from_dict, spec_to_dict

POLICIES = ("splitplace", "all_layer", "all_semantic", "compressed")

# deterministic scheduling-overhead model, milliseconds per interval
SCHED_BASE_MS = 0.05
SCHED_DECIDE_MS = 0.01
SCHED_PLACE_MS = 0.002


@dataclass
class RunConfig:
    cluster: str
    profiles: str
    trace: str | TraceSpec
    policy: str
    scheduler: str
    alpha: float = 0.1
    ucb_c: float = math.sqrt(2)
    replications: int = 1
    seed: int | None = None
    out: str | None = None


RUN_CONFIG_KEYS = {
    "cluster", "profiles", "trace", "policy", "scheduler",
    "alpha", "ucb_c", "replications", "seed", "out",
}


def load_run_config(path: str) -> RunConfig:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            d = json.load(fh)
    except OSError as e:
        raise ConfigError(f"{path}: {e}") from e
    except json.JSONDecodeError as e:
        raise ConfigError(f"{path}: parse error at line {e.lineno}: {e.msg}") from e
    if not isinstance(d, dict):
        raise ConfigError(f"{path}: expected an object")
    missing = RUN_CONFIG_KEYS - d.keys()
    extra = d.keys() - RUN_CONFIG_KEYS
    if missing:
        raise ConfigError(f"{path}: missing keys {sorted(missing)}")
    if extra:
        raise ConfigError(f"{path}: unknown keys {sorted(extra)}")
    trace = d["trace"]
    if not isinstance(trace, str):
        trace = spec_from_dict(trace, where=f"{path}: trace")
    config = RunConfig(
        cluster=d["cluster"],
        profiles=d["profiles"],
        trace=trace,
        policy=d["policy"],
        scheduler=d["scheduler"],
        alpha=d["alpha"],
        ucb_c=d["ucb_c"],
        replications=d["replications"],
        seed=d["seed"],
        out=d["out"],
    )
    validate_run_config(config)
    return config


def validate_run_config(config: RunConfig) -> None:
    if config.policy not in POLICIES:
        raise ConfigError(f"unknown policy {config.policy!r}; expected one of {POLICIES}")
    if config.scheduler not in SCHEDULERS:
        raise ConfigError(
            f"unknown scheduler {config.scheduler!r}; expected one of {tuple(SCHEDULERS)}"
        )
    if not isinstance(config.replications, int) or config.replications < 1:
        raise ConfigError("replications must be an integer >= 1")
    if not 0.0 < config.alpha <= 1.0:
        raise ConfigError("alpha must be in (0, 1]")
    if config.ucb_c < 0:
        raise ConfigError("ucb_c must be >= 0")
    if config.seed is not None and not isinstance(config.seed, int):
        raise ConfigError("seed must be an integer or null")


@dataclass
class _Pending:
    workload: Workload
    decision: SplitDecision | None = None
    graph: FragmentGraph | None = None
    accuracy: float = 0.0


@dataclass
class SimResult:
    """One replication: closed records (closures included), the synthetic
    per-interval scheduling times, engine, and decider summary."""

    records: list[WorkloadRecord]
    sched_times_ms: list[float]
    engine: Engine
    bandit_summary: dict = field(default_factory=dict)
    decisions: dict[int, SplitDecision] = field(default_factory=dict)


def _closure_record(w: Workload, decision: SplitDecision) -> WorkloadRecord:
    return WorkloadRecord(
        workload=w,
        decision=decision,
        dispatch_s=math.inf,
        completion_s=math.inf,
        response_time_s=math.inf,
        accuracy=0.0,
        sla_met=False,
        completed=False,
    )


def outcome_of(rec: WorkloadRecord) -> WorkloadOutcome:
    return WorkloadOutcome(
        response_time_s=rec.response_time_s,
        sla_s=rec.workload.sla_s,
        accuracy=rec.accuracy,
        decision=rec.decision,
        app=rec.workload.app,
    )


def simulate(
    cluster: ClusterConfig,
    profiles: dict[str, ApplicationProfile],
    trace: list[Workload],
    policy: str,
    scheduler: str,
    alpha: float = 0.1,
    ucb_c: float = math.sqrt(2),
    seed: int = 0,
    record_events: bool = False,
) -> SimResult:
    """Run one full replication of a policy over a trace."""
    if policy not in POLICIES:
        raise ConfigError(f"unknown policy {policy!r}")
    for w in trace:
        if w.app not in profiles:
            raise ConfigError(f"trace workload {w.id} names unknown application {w.app!r}")

    schedule = SCHEDULERS[scheduler]
    jitter = rng.stream(seed, "jitter")
    sched_rng = rng.stream(seed, "scheduler")
    engine = Engine(cluster, jitter, record_events=record_events)

    if policy == "compressed":
        eff_profiles = {name: compressed_variant(p) for name, p in profiles.items()}
    else:
        eff_profiles = profiles
    decider = SplitDecider(eff_profiles, alpha=alpha, ucb_c=ucb_c) if policy == "splitplace" else None
    forced = {
        "all_layer": SplitDecision.LAYER,
        "all_semantic": SplitDecision.SEMANTIC,
        "compressed": SplitDecision.LAYER,
    }.get(policy)

    trace = sorted(trace, key=lambda w: (w.arrival_s, w.id))
    queue: list[_Pending] = []
    records: list[WorkloadRecord] = []
    closures: list[WorkloadRecord] = []
    sched_times: list[float] = []
    decisions: dict[int, SplitDecision] = {}
    next_arrival = 0

    n_trace_intervals = int(math.ceil(trace[-1].arrival_s / cluster.interval_s)) + 1 if trace else 0
    max_intervals = n_trace_intervals + 1_000_000

    interval = 0
    while next_arrival < len(trace) or queue or not engine.idle():
        if interval >= max_intervals:
            break  # pathological livelock; close below
        now = engine.now
        while next_arrival < len(trace) and trace[next_arrival].arrival_s <= now:
            queue.append(_Pending(trace[next_arrival]))
            next_arrival += 1

        n_decided = 0
        n_attempted = 0
        still_queued: list[_Pending] = []
        for item in queue:
            if item.decision is None:
                w = item.workload
                item.decision = decider.decide(w) if decider else forced
                p = eff_profiles[w.app]
                item.graph = instantiate(w, item.decision, p)
                item.accuracy = (
                    p.accuracy_layer if item.decision is SplitDecision.LAYER
                    else p.accuracy_semantic
                )
                decisions[w.id] = item.decision
                n_decided += 1
                if not feasible_on_empty_cluster(item.graph, cluster):
                    closures.append(_closure_record(w, item.decision))
                    continue
            placement = schedule(item.graph, engine, sched_rng)
            n_attempted += len(item.graph.nodes)
            if placement is None:
                still_queued.append(item)
            else:
                engine.admit(item.workload, item.decision, item.accuracy, item.graph, placement)
        queue = still_queued
        sched_times.append(
            SCHED_BASE_MS + SCHED_DECIDE_MS * n_decided + SCHED_PLACE_MS * n_attempted
        )

        for rec in engine.step(cluster.interval_s):
            records.append(rec)
            if decider is not None:
                decider.feedback(rec.workload.id, outcome_of(rec))
        interval += 1

    for item in queue:  # only reachable through the livelock guard
        closures.append(_closure_record(item.workload, item.decision))
    for w, decision, _acc, _disp in engine.open_workloads():
        closures.append(_closure_record(w, decision))

    return SimResult(
        records=records + closures,
        sched_times_ms=sched_times,
        engine=engine,
        bandit_summary=decider.summary() if decider else {},
        decisions=decisions,
    )


@dataclass
class RunResult:
    reports: list[MetricsReport]
    aggregate: MetricsReport
    replications: list[SimResult]


def _load_inputs(config: RunConfig):
    cluster = load_cluster(config.cluster)
    profiles = load_profiles(config.profiles)
    if isinstance(config.trace, str):
        trace = load_trace(config.trace)
    else:
        trace = generate(config.trace, profiles, cluster.interval_s)
    for w in trace:
        if w.app not in profiles:
            raise ConfigError(f"trace workload {w.id} names unknown application {w.app!r}")
    return cluster, profiles, trace


def run(config: RunConfig, write: bool = True) -> RunResult:
    """Execute all replications of one config; write reports only once every
    replication has finished, so failures leave no partial output."""
    validate_run_config(config)
    cluster, profiles, trace = _load_inputs(config)
    base_seed = config.seed if config.seed is not None else cluster.seed

    reports: list[MetricsReport] = []
    sims: list[SimResult] = []
    for r in range(config.replications):
        sim = simulate(
            cluster, profiles, trace,
            policy=config.policy,
            scheduler=config.scheduler,
            alpha=config.alpha,
            ucb_c=config.ucb_c,
            seed=base_seed + r,
        )
        reports.append(
            summarize(
                sim.records,
                sim.engine.total_joules(),
                sim.sched_times_ms,
                model=config.policy,
                bandit=sim.bandit_summary,
            )
        )
        sims.append(sim)
    agg = aggregate(reports, model=config.policy)

    if write and config.out is not None:
        os.makedirs(config.out, exist_ok=True)
        for r, report in enumerate(reports):
            path = os.path.join(config.out, f"replication_{r:02d}.report.json")
            with open(path, "w", encoding="utf-8") as fh:
                json.dump(report_to_dict(report), fh, indent=2)
                fh.write("\n")
        with open(os.path.join(config.out, "aggregate.report.json"), "w", encoding="utf-8") as fh:
            json.dump(report_to_dict(agg), fh, indent=2)
            fh.write("\n")
        export_comparison([agg], os.path.join(config.out, "aggregate.csv"))
    return RunResult(reports=reports, aggregate=agg, replications=sims)


def compare(configs: list[RunConfig], out: str | None = None, fmt: str = "csv") -> list[MetricsReport]:
    """Run several configs over one shared trace and tabulate them, one row
    per policy in the given order."""
    if len(configs) < 2:
        raise ConfigError("compare requires >= 2 configs")
    loaded = [_load_inputs(c) for c in configs]
    cluster0, _, trace0 = loaded[0]
    for c, (cluster, _, trace) in zip(configs[1:], loaded[1:]):
        if cluster != cluster0:
            raise ConfigError("comparison requires a shared cluster")
        if trace != trace0:
            raise ConfigError("comparison requires a shared trace")
    rows = [run(c, write=False).aggregate for c in configs]
    if out is not None:
        os.makedirs(out, exist_ok=True)
        if fmt == "csv":
            export_comparison(rows, os.path.join(out, "comparison.csv"))
        elif fmt == "json":
            with open(os.path.join(out, "comparison.json"), "w", encoding="utf-8") as fh:
                json.dump([report_to_dict(r) for r in rows], fh, indent=2)
                fh.write("\n")
        else:
            raise ConfigError(f"unknown format {fmt!r}")
    return rows


def benchmark_trace_spec(seed: int = 7) -> TraceSpec:
    """The shipped mixed-deadline benchmark: deadlines straddle the layer
    execution-time estimate on both sides, ~2100 workloads over 3000 s at
    moderate cluster load."""
    return TraceSpec(
        horizon_s=3000.0,
        lambda_per_interval=0.7,
        app_mix={"resnet50v2": 1 / 3, "mobilenetv2": 1 / 3, "inceptionv3": 1 / 3},
        sla_multiplier_range=(0.5, 2.0),
        seed=seed,
    )


def run_config_to_dict(config: RunConfig) -> dict:
    trace = config.trace if isinstance(config.trace, str) else spec_to_dict(config.trace)
    return {
        "cluster": config.cluster,
        "profiles": config.profiles,
        "trace": trace,
        "policy": config.policy,
        "scheduler": config.scheduler,
        "alpha": config.alpha,
        "ucb_c": config.ucb_c,
        "replications": config.replications,
        "seed": config.seed,
        "out": config.out,
    }
