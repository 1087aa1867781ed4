"""Run outcome aggregation and report export.

A report carries the five headline quantities (energy, scheduling time, SLA
violation rate, accuracy, reward) plus response-time distribution figures
and the decider's per-context bandit statistics. Workloads still unfinished
when a run closes count as SLA violations with zero accuracy; their response
times are excluded from the distribution figures.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

from .engine import WorkloadRecord

CSV_COLUMNS = (
    "model",
    "energy_wh",
    "sched_time_ms_mean",
    "sched_time_ms_std",
    "sla_violation_rate",
    "sla_violation_std",
    "accuracy_mean",
    "reward",
)


@dataclass(frozen=True)
class MetricsReport:
    model: str
    energy_wh: float
    sched_time_ms_mean: float
    sched_time_ms_std: float
    sla_violation_rate: float
    sla_violation_std: float
    accuracy_mean: float
    reward: float
    response_time_stats: dict[str, float]
    bandit: dict = field(default_factory=dict)
    completed: int = 0
    unfinished: int = 0


def _mean(xs: list[float]) -> float:
    return sum(xs) / len(xs)


def _sample_std(xs: list[float]) -> float:
    if len(xs) < 2:
        return 0.0
    m = _mean(xs)
    return math.sqrt(sum((x - m) ** 2 for x in xs) / (len(xs) - 1))


def _p95(sorted_xs: list[float]) -> float:
    # nearest-rank percentile
    idx = max(0, math.ceil(0.95 * len(sorted_xs)) - 1)
    return sorted_xs[idx]


def summarize(
    records: list[WorkloadRecord],
    total_joules: float,
    sched_times_ms: list[float],
    model: str,
    bandit: dict | None = None,
) -> MetricsReport:
    """Fold one replication's records into a report.

    `records` must contain every closed workload, including closure records
    for unfinished ones (completed=False, accuracy 0, deadline missed).
    """
    done = [r for r in records if r.completed]
    if not done:
        raise ValueError("summarize requires >= 1 completed workload")
    n = len(records)
    violations = sum(1 for r in records if not r.sla_met)
    reward = sum((1.0 if r.sla_met else 0.0) + r.accuracy for r in records) / (2 * n)
    rts = sorted(r.response_time_s for r in done)
    return MetricsReport(
        model=model,
        energy_wh=total_joules / 3600.0,
        sched_time_ms_mean=_mean(sched_times_ms) if sched_times_ms else 0.0,
        sched_time_ms_std=_sample_std(sched_times_ms),
        sla_violation_rate=violations / n,
        sla_violation_std=0.0,
        accuracy_mean=_mean([r.accuracy for r in records]),
        reward=reward,
        response_time_stats={
            "mean": _mean(rts),
            "p95": _p95(rts),
            "max": rts[-1],
        },
        bandit=dict(bandit) if bandit else {},
        completed=len(done),
        unfinished=n - len(done),
    )


def aggregate(reports: list[MetricsReport], model: str | None = None) -> MetricsReport:
    """Mean +- sample standard deviation across replications."""
    if not reports:
        raise ValueError("aggregate requires >= 1 report")
    if model is None:
        model = reports[0].model
    rates = [r.sla_violation_rate for r in reports]
    sched_means = [r.sched_time_ms_mean for r in reports]
    return MetricsReport(
        model=model,
        energy_wh=_mean([r.energy_wh for r in reports]),
        sched_time_ms_mean=_mean(sched_means),
        sched_time_ms_std=_sample_std(sched_means),
        sla_violation_rate=_mean(rates),
        sla_violation_std=_sample_std(rates),
        accuracy_mean=_mean([r.accuracy_mean for r in reports]),
        reward=_mean([r.reward for r in reports]),
        response_time_stats={
            "mean": _mean([r.response_time_stats["mean"] for r in reports]),
            "p95": _mean([r.response_time_stats["p95"] for r in reports]),
            "max": max(r.response_time_stats["max"] for r in reports),
        },
        bandit={},
        completed=sum(r.completed for r in reports),
        unfinished=sum(r.unfinished for r in reports),
    )


def report_to_dict(r: MetricsReport) -> dict:
    return {
        "model": r.model,
        "energy_wh": r.energy_wh,
        "sched_time_ms_mean": r.sched_time_ms_mean,
        "sched_time_ms_std": r.sched_time_ms_std,
        "sla_violation_rate": r.sla_violation_rate,
        "sla_violation_std": r.sla_violation_std,
        "accuracy_mean": r.accuracy_mean,
        "reward": r.reward,
        "response_time_stats": dict(r.response_time_stats),
        "bandit": r.bandit,
        "completed": r.completed,
        "unfinished": r.unfinished,
    }


def report_from_dict(d: dict) -> MetricsReport:
    return MetricsReport(
        model=d["model"],
        energy_wh=d["energy_wh"],
        sched_time_ms_mean=d["sched_time_ms_mean"],
        sched_time_ms_std=d["sched_time_ms_std"],
        sla_violation_rate=d["sla_violation_rate"],
        sla_violation_std=d["sla_violation_std"],
        accuracy_mean=d["accuracy_mean"],
        reward=d["reward"],
        response_time_stats=dict(d["response_time_stats"]),
        bandit=d.get("bandit", {}),
        completed=d.get("completed", 0),
        unfinished=d.get("unfinished", 0),
    )


def _csv_cell(v) -> str:
    return repr(v) if isinstance(v, float) else str(v)


def csv_lines(reports: list[MetricsReport]) -> list[str]:
    """Header plus one row per report, column order fixed."""
    lines = [",".join(CSV_COLUMNS)]
    for r in reports:
        d = report_to_dict(r)
        lines.append(",".join(_csv_cell(d[c]) for c in CSV_COLUMNS))
    return lines


def export(report: MetricsReport, fmt: str, path: str) -> None:
    """Write one report as json or csv."""
    if fmt == "json":
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(report_to_dict(report), fh, indent=2)
            fh.write("\n")
    elif fmt == "csv":
        export_comparison([report], path)
    else:
        raise ValueError(f"unknown export format {fmt!r}")


def export_comparison(reports: list[MetricsReport], path: str) -> None:
    """CSV with one row per report, in the given order (baseline first)."""
    with open(path, "w", encoding="utf-8") as fh:
        for line in csv_lines(reports):
            fh.write(line)
            fh.write("\n")
