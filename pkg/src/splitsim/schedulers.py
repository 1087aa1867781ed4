"""Pluggable fragment-placement policies.

A policy maps (fragment graph, read-only cluster view) to either a complete
node->host assignment or None, meaning the workload queues and is retried at
the next interval. Placements are atomic: no partial assignment ever leaks.
The split decision layer is independent of which policy runs underneath;
policies only see graphs, never deadlines or bandit state. An RL policy can
be added by registering another callable with the same signature.

Fragments are offered to policies in topological-level order: chain
fragments in chain order (so greedy policies pack them onto few hosts,
minimizing transfers), semantic branches breadth-first across branches (so
load-balancing policies spread them over distinct hosts, realizing the
parallelism).
"""
from __future__ import annotations

from typing import Callable, Protocol

import numpy as np

from .engine import FragmentGraph
from .model import ClusterConfig, Host


class ClusterView(Protocol):
    hosts: tuple[Host, ...]

    def free_ram(self, host_id: int) -> float: ...

    def running_count(self, host_id: int) -> int: ...


Placement = dict[int, int]
Scheduler = Callable[[FragmentGraph, ClusterView, "np.random.Generator | None"], "Placement | None"]


def placement_order(graph: FragmentGraph) -> list[int]:
    """Topological levels, stable by node index within a level."""
    preds = graph.preds()
    depth = [0] * len(graph.nodes)
    # edges are emitted in topological order, so one pass settles depths
    for a, b in graph.edges:
        depth[b] = max(depth[b], depth[a] + 1)
    return sorted(range(len(graph.nodes)), key=lambda n: (depth[n], n))


def place_first_fit(
    graph: FragmentGraph, view: ClusterView, rng: np.random.Generator | None = None
) -> Placement | None:
    """Lowest-id host with enough free RAM, per fragment."""
    committed = [0.0] * len(view.hosts)
    placement: Placement = {}
    for node in placement_order(graph):
        ram = graph.nodes[node].ram_mb
        for h in range(len(view.hosts)):
            if ram <= view.free_ram(h) - committed[h]:
                placement[node] = h
                committed[h] += ram
                break
        else:
            return None
    return placement


def place_least_loaded(
    graph: FragmentGraph, view: ClusterView, rng: np.random.Generator | None = None
) -> Placement | None:
    """Feasible host with the fewest running fragments, ties toward lower id;
    load counts fragments assigned earlier in this same placement."""
    committed = [0.0] * len(view.hosts)
    load = [view.running_count(h) for h in range(len(view.hosts))]
    placement: Placement = {}
    for node in placement_order(graph):
        ram = graph.nodes[node].ram_mb
        best = None
        for h in range(len(view.hosts)):
            if ram <= view.free_ram(h) - committed[h]:
                if best is None or load[h] < load[best]:
                    best = h
        if best is None:
            return None
        placement[node] = best
        committed[best] += ram
        load[best] += 1
    return placement


def place_random(
    graph: FragmentGraph, view: ClusterView, rng: np.random.Generator | None = None
) -> Placement | None:
    """Uniform choice among feasible hosts, drawn from the scheduler stream."""
    if rng is None:
        raise ValueError("place_random requires the scheduler RNG stream")
    committed = [0.0] * len(view.hosts)
    placement: Placement = {}
    for node in placement_order(graph):
        ram = graph.nodes[node].ram_mb
        feasible = [
            h for h in range(len(view.hosts)) if ram <= view.free_ram(h) - committed[h]
        ]
        if not feasible:
            return None
        h = feasible[int(rng.integers(len(feasible)))]
        placement[node] = h
        committed[h] += ram
    return placement


SCHEDULERS: dict[str, Scheduler] = {
    "first_fit": place_first_fit,
    "least_loaded": place_least_loaded,
    "random": place_random,
}


class _EmptyView:
    """A cluster as if nothing were placed; used for feasibility screening."""

    def __init__(self, cluster: ClusterConfig):
        self.hosts = cluster.hosts

    def free_ram(self, host_id: int) -> float:
        return self.hosts[host_id].ram_mb

    def running_count(self, host_id: int) -> int:
        return 0


def feasible_on_empty_cluster(graph: FragmentGraph, cluster: ClusterConfig) -> bool:
    """Whether the graph could ever be placed, judged by first-fit packing
    onto an idle cluster. Workloads failing this can never run."""
    return place_first_fit(graph, _EmptyView(cluster)) is not None
