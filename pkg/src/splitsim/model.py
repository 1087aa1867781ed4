"""Domain types for the edge cluster simulator: hosts, split application
profiles, workloads and cluster configuration, plus validation and JSON
(de)serialization for all of them.

All types are immutable value objects; validators report violations as data
(lists of messages) instead of raising, while the file loaders raise
:class:`ConfigError` with line/field context.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from enum import Enum
from typing import Iterable


class ConfigError(Exception):
    """A configuration file failed to parse or validate."""


class SplitDecision(Enum):
    """How a network is split for one workload.

    Layer: consecutive fragment groups executed sequentially, intermediates
    forwarded hop by hop. Semantic: independent branches executed in
    parallel, then combined by an aggregation fragment. Layer comes first so
    that deterministic tie-breaks favour it.
    """

    LAYER = "layer"
    SEMANTIC = "semantic"


@dataclass(frozen=True)
class Fragment:
    """One placeable piece of a split network."""

    compute_mi: float  # million instructions, > 0
    ram_mb: float      # resident footprint while placed, > 0
    output_mb: float   # forwarded intermediate size, >= 0

    def errors(self, where: str = "fragment") -> list[str]:
        errs = []
        for field in ("compute_mi", "ram_mb", "output_mb"):
            v = getattr(self, field)
            if not isinstance(v, (int, float)) or not math.isfinite(v):
                errs.append(f"{where}.{field} not finite")
        if not errs:
            if self.compute_mi <= 0:
                errs.append(f"{where}.compute_mi must be > 0")
            if self.ram_mb <= 0:
                errs.append(f"{where}.ram_mb must be > 0")
            if self.output_mb < 0:
                errs.append(f"{where}.output_mb must be >= 0")
        return errs


@dataclass(frozen=True)
class Host:
    """An edge node: compute capacity, RAM, power envelope, network endpoint."""

    id: int
    capacity_mips: float
    ram_mb: float
    power_idle_w: float
    power_max_w: float
    bandwidth_mbps: float      # megabytes per second
    latency_base_s: float
    latency_jitter_std_s: float

    def errors(self, where: str = "host") -> list[str]:
        errs = []
        numeric = (
            "capacity_mips", "ram_mb", "power_idle_w", "power_max_w",
            "bandwidth_mbps", "latency_base_s", "latency_jitter_std_s",
        )
        for field in numeric:
            v = getattr(self, field)
            if not isinstance(v, (int, float)) or not math.isfinite(v):
                errs.append(f"{where}.{field} not finite")
        if errs:
            return errs
        for field in ("capacity_mips", "ram_mb", "bandwidth_mbps"):
            if getattr(self, field) <= 0:
                errs.append(f"{where}.{field} must be > 0")
        if self.power_idle_w < 0:
            errs.append(f"{where}.power_idle_w must be >= 0")
        if self.power_max_w < self.power_idle_w:
            errs.append(f"{where}.power_max_w must be >= power_idle_w")
        if self.latency_base_s < 0:
            errs.append(f"{where}.latency_base_s must be >= 0")
        if self.latency_jitter_std_s < 0:
            errs.append(f"{where}.latency_jitter_std_s must be >= 0")
        return errs


@dataclass(frozen=True)
class ApplicationProfile:
    """Per-application split definitions: the sequential layer chain, the
    parallel semantic branch tree with its aggregation fragment, and the
    accuracy each split achieves."""

    name: str
    layer_chain: tuple[Fragment, ...]
    semantic_branches: tuple[tuple[Fragment, ...], ...]
    aggregation: Fragment
    accuracy_layer: float
    accuracy_semantic: float
    reference_mips: float  # seeds the layer execution-time prior


@dataclass(frozen=True)
class Workload:
    """One inference job: arrival time, application type, relative SLA deadline."""

    id: int
    arrival_s: float
    app: str
    sla_s: float

    def errors(self, where: str = "workload") -> list[str]:
        errs = []
        if not isinstance(self.id, int) or self.id < 0:
            errs.append(f"{where}.id must be a non-negative integer")
        if not math.isfinite(self.arrival_s) or self.arrival_s < 0:
            errs.append(f"{where}.arrival_s must be >= 0")
        if not math.isfinite(self.sla_s) or self.sla_s <= 0:
            errs.append(f"{where}.sla_s must be > 0")
        if not self.app:
            errs.append(f"{where}.app must be a non-empty name")
        return errs


@dataclass(frozen=True)
class ClusterConfig:
    """Hosts plus the scheduling interval and master seed of a run."""

    hosts: tuple[Host, ...]
    interval_s: float
    seed: int


def validate_profile(p: ApplicationProfile) -> list[str]:
    """Check every ApplicationProfile invariant; empty list means valid.

    Violations are reported as data, one message per broken invariant.
    """
    errs: list[str] = []
    if not p.name:
        errs.append("name empty")
    if len(p.layer_chain) < 1:
        errs.append("layer_chain empty")
    for i, f in enumerate(p.layer_chain):
        errs.extend(f.errors(f"layer_chain[{i}]"))
        # only the terminal fragment may omit an output
        if f.output_mb == 0 and i < len(p.layer_chain) - 1:
            errs.append(f"layer_chain[{i}].output_mb = 0 on a non-terminal fragment")
    if len(p.semantic_branches) < 2:
        errs.append("semantic_branches requires >= 2 branches")
    for b, branch in enumerate(p.semantic_branches):
        if len(branch) == 0:
            errs.append(f"semantic_branches[{b}] empty")
        for i, f in enumerate(branch):
            errs.extend(f.errors(f"semantic_branches[{b}][{i}]"))
            if f.output_mb == 0:
                errs.append(
                    f"semantic_branches[{b}][{i}].output_mb = 0 on a non-terminal fragment"
                )
    errs.extend(p.aggregation.errors("aggregation"))
    for field in ("accuracy_layer", "accuracy_semantic"):
        v = getattr(p, field)
        if not isinstance(v, (int, float)) or not (0.0 <= v <= 1.0):
            errs.append(f"{field} must be in [0, 1]")
    if (
        isinstance(p.accuracy_layer, (int, float))
        and isinstance(p.accuracy_semantic, (int, float))
        and p.accuracy_layer < p.accuracy_semantic
    ):
        errs.append("accuracy ordering violated: accuracy_layer < accuracy_semantic")
    if not isinstance(p.reference_mips, (int, float)) or not math.isfinite(p.reference_mips) \
            or p.reference_mips <= 0:
        errs.append("reference_mips must be > 0")
    return errs


def validate_cluster(c: ClusterConfig) -> list[str]:
    errs: list[str] = []
    if len(c.hosts) < 1:
        errs.append(">=1 host required")
    for i, h in enumerate(c.hosts):
        errs.extend(h.errors(f"hosts[{i}]"))
        if h.id != i:
            errs.append(f"hosts[{i}].id must be {i} (contiguous from 0)")
    if not math.isfinite(c.interval_s) or c.interval_s <= 0:
        errs.append("interval_s must be > 0")
    if not isinstance(c.seed, int) or c.seed < 0 or c.seed >= 2 ** 64:
        errs.append("seed must be a 64-bit unsigned integer")
    return errs


def prior_layer_seconds(p: ApplicationProfile) -> float:
    """Execution-time prior for the layer split: total chain compute over the
    profile's reference rate. Seeds both SLA sampling and the decider's
    moving-average estimate before any observation."""
    return sum(f.compute_mi for f in p.layer_chain) / p.reference_mips


def compressed_variant(p: ApplicationProfile) -> ApplicationProfile:
    """Synthetic model-compression profile: the whole network as one fragment
    at half the layer-chain compute, with a 2-point accuracy penalty.

    The fragment keeps the largest layer-fragment footprint so it still has
    to fit on a single host.
    """
    total_mi = sum(f.compute_mi for f in p.layer_chain)
    frag = Fragment(
        compute_mi=0.5 * total_mi,
        ram_mb=max(f.ram_mb for f in p.layer_chain),
        output_mb=0.0,
    )
    acc = max(0.0, p.accuracy_layer - 0.02)
    return ApplicationProfile(
        name=p.name,
        layer_chain=(frag,),
        semantic_branches=p.semantic_branches,
        aggregation=p.aggregation,
        accuracy_layer=acc,
        accuracy_semantic=min(p.accuracy_semantic, acc),
        reference_mips=p.reference_mips,
    )


# --- JSON (de)serialization -------------------------------------------------

def fragment_to_dict(f: Fragment) -> dict:
    return {"compute_mi": f.compute_mi, "ram_mb": f.ram_mb, "output_mb": f.output_mb}


def fragment_from_dict(d: dict, where: str = "fragment") -> Fragment:
    _require_keys(d, {"compute_mi", "ram_mb", "output_mb"}, where)
    return Fragment(
        compute_mi=_num(d, "compute_mi", where),
        ram_mb=_num(d, "ram_mb", where),
        output_mb=_num(d, "output_mb", where),
    )


def profile_to_dict(p: ApplicationProfile) -> dict:
    return {
        "name": p.name,
        "layer_chain": [fragment_to_dict(f) for f in p.layer_chain],
        "semantic_branches": [
            [fragment_to_dict(f) for f in branch] for branch in p.semantic_branches
        ],
        "aggregation": fragment_to_dict(p.aggregation),
        "accuracy_layer": p.accuracy_layer,
        "accuracy_semantic": p.accuracy_semantic,
        "reference_mips": p.reference_mips,
    }


def profile_from_dict(d: dict, where: str = "profile") -> ApplicationProfile:
    keys = {
        "name", "layer_chain", "semantic_branches", "aggregation",
        "accuracy_layer", "accuracy_semantic", "reference_mips",
    }
    _require_keys(d, keys, where)
    p = ApplicationProfile(
        name=d["name"],
        layer_chain=tuple(
            fragment_from_dict(f, f"{where}.layer_chain[{i}]")
            for i, f in enumerate(d["layer_chain"])
        ),
        semantic_branches=tuple(
            tuple(
                fragment_from_dict(f, f"{where}.semantic_branches[{b}][{i}]")
                for i, f in enumerate(branch)
            )
            for b, branch in enumerate(d["semantic_branches"])
        ),
        aggregation=fragment_from_dict(d["aggregation"], f"{where}.aggregation"),
        accuracy_layer=_num(d, "accuracy_layer", where),
        accuracy_semantic=_num(d, "accuracy_semantic", where),
        reference_mips=_num(d, "reference_mips", where),
    )
    errs = validate_profile(p)
    if errs:
        raise ConfigError(f"{where} ({p.name!r}) invalid: " + "; ".join(errs))
    return p


def host_to_dict(h: Host) -> dict:
    return {
        "capacity_mips": h.capacity_mips,
        "ram_mb": h.ram_mb,
        "power_idle_w": h.power_idle_w,
        "power_max_w": h.power_max_w,
        "bandwidth_mbps": h.bandwidth_mbps,
        "latency_base_s": h.latency_base_s,
        "latency_jitter_std_s": h.latency_jitter_std_s,
    }


def host_from_dict(d: dict, hid: int, where: str = "host") -> Host:
    keys = {
        "capacity_mips", "ram_mb", "power_idle_w", "power_max_w",
        "bandwidth_mbps", "latency_base_s", "latency_jitter_std_s",
    }
    _require_keys(d, keys, where)
    return Host(id=hid, **{k: _num(d, k, where) for k in sorted(keys)})


def cluster_to_dict(c: ClusterConfig) -> dict:
    return {
        "hosts": [host_to_dict(h) for h in c.hosts],
        "interval_s": c.interval_s,
        "seed": c.seed,
    }


def cluster_from_dict(d: dict, where: str = "cluster") -> ClusterConfig:
    _require_keys(d, {"hosts", "interval_s", "seed"}, where)
    if not isinstance(d["hosts"], list):
        raise ConfigError(f"{where}.hosts must be an array")
    hosts = tuple(
        host_from_dict(h, i, f"{where}.hosts[{i}]") for i, h in enumerate(d["hosts"])
    )
    c = ClusterConfig(hosts=hosts, interval_s=_num(d, "interval_s", where), seed=d["seed"])
    errs = validate_cluster(c)
    if errs:
        raise ConfigError(f"{where} invalid: " + "; ".join(errs))
    return c


def load_cluster(path: str) -> ClusterConfig:
    """Load and fully validate a cluster config file."""
    return cluster_from_dict(_load_json(path), where=str(path))


def save_cluster(c: ClusterConfig, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(cluster_to_dict(c), fh, indent=2)
        fh.write("\n")


def load_profiles(path: str) -> dict[str, ApplicationProfile]:
    """Load a JSON array of application profiles, keyed by name."""
    raw = _load_json(path)
    if not isinstance(raw, list):
        raise ConfigError(f"{path}: expected an array of profiles")
    profiles: dict[str, ApplicationProfile] = {}
    for i, d in enumerate(raw):
        p = profile_from_dict(d, f"{path}: profile[{i}]")
        if p.name in profiles:
            raise ConfigError(f"{path}: duplicate profile name {p.name!r}")
        profiles[p.name] = p
    return profiles


def save_profiles(profiles: Iterable[ApplicationProfile], path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump([profile_to_dict(p) for p in profiles], fh, indent=2)
        fh.write("\n")


def _load_json(path: str):
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as e:
        raise ConfigError(f"{path}: {e}") from e
    except json.JSONDecodeError as e:
        raise ConfigError(f"{path}: parse error at line {e.lineno}, column {e.colno}: {e.msg}") from e


def _require_keys(d: dict, keys: set[str], where: str) -> None:
    if not isinstance(d, dict):
        raise ConfigError(f"{where}: expected an object")
    missing = keys - d.keys()
    extra = d.keys() - keys
    if missing:
        raise ConfigError(f"{where}: missing keys {sorted(missing)}")
    if extra:
        raise ConfigError(f"{where}: unknown keys {sorted(extra)}")


def _num(d: dict, key: str, where: str) -> float:
    v = d[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"{where}.{key}: expected a number, got {type(v).__name__}")
    return v


# --- bundled defaults -------------------------------------------------------

def default_cluster(seed: int = 42, interval_s: float = 1.0) -> ClusterConfig:
    """Ten Raspberry-Pi-class hosts with RAM alternating between 4 and 8 GB.

    Capacity and power figures are plausible single-board numbers, not
    measurements.
    """
    hosts = []
    for i in range(10):
        big = i % 2 == 1
        hosts.append(
            Host(
                id=i,
                capacity_mips=2400.0 if big else 1600.0,
                ram_mb=8192.0 if big else 4096.0,
                power_idle_w=3.2 if big else 2.6,
                power_max_w=7.5 if big else 6.0,
                bandwidth_mbps=50.0,
                latency_base_s=0.01,
                latency_jitter_std_s=0.002,
            )
        )
    return ClusterConfig(hosts=tuple(hosts), interval_s=interval_s, seed=seed)


def _even_profile(
    name: str,
    frag_mi: float,
    frag_ram: float,
    out_mb: float,
    acc_layer: float,
    acc_semantic: float,
    pieces: int = 4,
) -> ApplicationProfile:
    """Symmetric synthetic profile: `pieces` layer fragments and the same
    compute re-cut into `pieces` parallel branches, plus an aggregation
    fragment costing 1% of the branch total."""
    layer = tuple(
        Fragment(frag_mi, frag_ram, out_mb if i < pieces - 1 else 0.0)
        for i in range(pieces)
    )
    branches = tuple((Fragment(frag_mi, frag_ram, out_mb),) for _ in range(pieces))
    agg = Fragment(0.01 * frag_mi * pieces, frag_ram / 2, 0.0)
    return ApplicationProfile(
        name=name,
        layer_chain=layer,
        semantic_branches=branches,
        aggregation=agg,
        accuracy_layer=acc_layer,
        accuracy_semantic=acc_semantic,
        reference_mips=1800.0,
    )


def default_profiles() -> dict[str, ApplicationProfile]:
    """Three bundled image-classification profiles.

    Names follow well-known architectures; the MI/MB demands are synthetic
    placeholders sized for the default cluster, not measured models.
    """
    profiles = [
        _even_profile("resnet50v2", 2000.0, 700.0, 4.0, 0.93, 0.89),
        _even_profile("mobilenetv2", 700.0, 300.0, 2.0, 0.90, 0.87),
        _even_profile("inceptionv3", 3000.0, 900.0, 6.0, 0.94, 0.90),
    ]
    return {p.name: p for p in profiles}
