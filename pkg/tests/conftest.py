from __future__ import annotations

import pytest

from splitsim.model import ApplicationProfile, ClusterConfig, Fragment, Host


def make_host(
    hid: int = 0,
    capacity: float = 1000.0,
    ram: float = 1e6,
    idle_w: float = 3.0,
    max_w: float = 7.0,
    bw: float = 10.0,
    lat: float = 0.0,
    jitter: float = 0.0,
) -> Host:
    return Host(
        id=hid,
        capacity_mips=capacity,
        ram_mb=ram,
        power_idle_w=idle_w,
        power_max_w=max_w,
        bandwidth_mbps=bw,
        latency_base_s=lat,
        latency_jitter_std_s=jitter,
    )


def make_cluster(hosts, interval_s: float = 1.0, seed: int = 0) -> ClusterConfig:
    return ClusterConfig(hosts=tuple(hosts), interval_s=interval_s, seed=seed)


def make_profile(
    name: str = "app",
    layer_mi=(2000.0, 2000.0, 2000.0, 2000.0),
    branch_mi=(2000.0, 2000.0, 2000.0, 2000.0),
    agg_mi: float = 80.0,
    frag_ram: float = 10.0,
    out_mb: float = 0.0,
    acc_layer: float = 0.92,
    acc_semantic: float = 0.88,
    reference_mips: float = 2000.0,
) -> ApplicationProfile:
    # non-terminal fragments must declare an output; keep it negligible when
    # the scenario wants effectively free transfers
    fwd_out = out_mb if out_mb > 0 else 1e-9
    chain = tuple(
        Fragment(mi, frag_ram, fwd_out if i < len(layer_mi) - 1 else 0.0)
        for i, mi in enumerate(layer_mi)
    )
    branches = tuple((Fragment(mi, frag_ram, fwd_out),) for mi in branch_mi)
    return ApplicationProfile(
        name=name,
        layer_chain=chain,
        semantic_branches=branches,
        aggregation=Fragment(agg_mi, frag_ram, 0.0),
        accuracy_layer=acc_layer,
        accuracy_semantic=acc_semantic,
        reference_mips=reference_mips,
    )


@pytest.fixture
def profile() -> ApplicationProfile:
    return make_profile()
