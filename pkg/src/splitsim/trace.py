"""Workload trace generation and JSON-lines persistence.

Arrivals follow a per-interval Poisson process over a categorical
application mix. Each workload's relative deadline is a uniform multiplier
of its application's estimated layer execution time, so traces exercise both
sides of the tight/loose boundary by construction. Traces are written to
disk so every policy replays identical inputs.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Mapping

from . import rng
from .model import ApplicationProfile, ConfigError, Workload, prior_layer_seconds


@dataclass(frozen=True)
class TraceSpec:
    horizon_s: float
    lambda_per_interval: float
    app_mix: dict[str, float]
    sla_multiplier_range: tuple[float, float]
    seed: int


def validate_spec(spec: TraceSpec) -> list[str]:
    errs = []
    if not spec.horizon_s > 0:
        errs.append("horizon_s must be > 0")
    if not spec.lambda_per_interval >= 0:
        errs.append("lambda_per_interval must be >= 0")
    if not spec.app_mix:
        errs.append("app_mix empty")
    elif abs(sum(spec.app_mix.values()) - 1.0) > 1e-9:
        errs.append("app_mix probabilities must sum to 1")
    lo, hi = spec.sla_multiplier_range
    if not (0 < lo <= hi):
        errs.append("sla_multiplier_range must satisfy 0 < min <= max")
    return errs


def generate(
    spec: TraceSpec,
    profiles: Mapping[str, ApplicationProfile],
    interval_s: float = 1.0,
) -> list[Workload]:
    """Sample a workload trace; fully determined by spec.seed.

    Arrival counts are Poisson per interval with uniform placement inside
    the interval; ids are dense in arrival order.
    """
    errs = validate_spec(spec)
    if errs:
        raise ValueError("invalid trace spec: " + "; ".join(errs))
    for app in spec.app_mix:
        if app not in profiles:
            raise KeyError(f"app_mix names unknown application {app!r}")

    apps = sorted(spec.app_mix)
    probs = [spec.app_mix[a] for a in apps]
    priors = {a: prior_layer_seconds(profiles[a]) for a in apps}
    lo, hi = spec.sla_multiplier_range
    gen = rng.stream(spec.seed, "trace")

    n_intervals = int(math.floor(spec.horizon_s / interval_s))
    raw: list[tuple[float, str, float]] = []
    for k in range(n_intervals):
        count = int(gen.poisson(spec.lambda_per_interval))
        for _ in range(count):
            t = k * interval_s + float(gen.uniform(0.0, interval_s))
            app = apps[int(gen.choice(len(apps), p=probs))]
            u = float(gen.uniform(lo, hi))
            raw.append((t, app, u * priors[app]))
    raw.sort(key=lambda r: r[0])
    return [
        Workload(id=i, arrival_s=t, app=app, sla_s=sla)
        for i, (t, app, sla) in enumerate(raw)
    ]


def save_trace(trace: list[Workload], path: str) -> None:
    """One workload per line, keys id/arrival_s/app/sla_s."""
    with open(path, "w", encoding="utf-8") as fh:
        for w in trace:
            fh.write(json.dumps(
                {"id": w.id, "arrival_s": w.arrival_s, "app": w.app, "sla_s": w.sla_s}
            ))
            fh.write("\n")


def load_trace(path: str) -> list[Workload]:
    trace: list[Workload] = []
    seen_ids: set[int] = set()
    try:
        fh = open(path, "r", encoding="utf-8")
    except OSError as e:
        raise ConfigError(f"{path}: {e}") from e
    with fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                d = json.loads(line)
            except json.JSONDecodeError as e:
                raise ConfigError(f"{path}: line {lineno}: {e.msg}") from e
            if not isinstance(d, dict) or set(d) != {"id", "arrival_s", "app", "sla_s"}:
                raise ConfigError(
                    f"{path}: line {lineno}: expected keys id, arrival_s, app, sla_s"
                )
            w = Workload(id=d["id"], arrival_s=d["arrival_s"], app=d["app"], sla_s=d["sla_s"])
            errs = w.errors()
            if errs:
                raise ConfigError(f"{path}: line {lineno}: " + "; ".join(errs))
            if w.id in seen_ids:
                raise ConfigError(f"{path}: line {lineno}: duplicate workload id {w.id}")
            seen_ids.add(w.id)
            trace.append(w)
    return trace


def spec_to_dict(spec: TraceSpec) -> dict:
    return {
        "horizon_s": spec.horizon_s,
        "lambda_per_interval": spec.lambda_per_interval,
        "app_mix": dict(spec.app_mix),
        "sla_multiplier_range": list(spec.sla_multiplier_range),
        "seed": spec.seed,
    }


def spec_from_dict(d: dict, where: str = "trace") -> TraceSpec:
    keys = {"horizon_s", "lambda_per_interval", "app_mix", "sla_multiplier_range", "seed"}
    if not isinstance(d, dict):
        raise ConfigError(f"{where}: expected an object or a file path")
    missing = keys - d.keys()
    extra = d.keys() - keys
    if missing:
        raise ConfigError(f"{where}: missing keys {sorted(missing)}")
    if extra:
        raise ConfigError(f"{where}: unknown keys {sorted(extra)}")
    rng_range = d["sla_multiplier_range"]
    if not (isinstance(rng_range, (list, tuple)) and len(rng_range) == 2):
        raise ConfigError(f"{where}.sla_multiplier_range: expected [min, max]")
    spec = TraceSpec(
        horizon_s=d["horizon_s"],
        lambda_per_interval=d["lambda_per_interval"],
        app_mix=dict(d["app_mix"]),
        sla_multiplier_range=(rng_range[0], rng_range[1]),
        seed=d["seed"],
    )
    errs = validate_spec(spec)
    if errs:
        raise ConfigError(f"{where} invalid: " + "; ".join(errs))
    return spec
