"""Deterministic fluid simulation of hosts executing fragment graphs.

Hosts run a processor-sharing CPU: capacity is split equally among the
fragments currently running there, shares being recomputed at every internal
event (fragment completion or transfer arrival). Time therefore advances by
exact event subdivision inside each scheduling interval, so completion times
do not depend on the interval length - the interval only gates when new
workloads are admitted.

Completed fragments forward their output to successor hosts; inter-host
transfers take size/min(bandwidth) plus a Gaussian-jittered link latency,
truncated at zero. Same-host handoff is free and instantaneous. Energy is
integrated per host as idle power plus the idle-to-max span whenever at
least one fragment is running.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .model import ApplicationProfile, ClusterConfig, Fragment, Host, SplitDecision, Workload


class EngineError(Exception):
    """An operation violated the engine's contracts (e.g. infeasible placement)."""


@dataclass(frozen=True)
class FragmentGraph:
    """Precedence graph of one workload's fragments.

    Layer splits become a linear chain; semantic splits become parallel
    branch chains all feeding one aggregation node (the terminal).
    """

    kind: SplitDecision
    nodes: tuple[Fragment, ...]
    edges: tuple[tuple[int, int], ...]
    terminal: int

    def preds(self) -> list[list[int]]:
        p: list[list[int]] = [[] for _ in self.nodes]
        for a, b in self.edges:
            p[b].append(a)
        return p

    def succs(self) -> list[list[int]]:
        s: list[list[int]] = [[] for _ in self.nodes]
        for a, b in self.edges:
            s[a].append(b)
        return s


def instantiate(w: Workload, d: SplitDecision, p: ApplicationProfile) -> FragmentGraph:
    """Build the fragment graph the chosen split implies for this workload."""
    if d is SplitDecision.LAYER:
        nodes = tuple(p.layer_chain)
        edges = tuple((i, i + 1) for i in range(len(nodes) - 1))
        return FragmentGraph(kind=d, nodes=nodes, edges=edges, terminal=len(nodes) - 1)
    nodes: list[Fragment] = []
    edges: list[tuple[int, int]] = []
    ends: list[int] = []
    for branch in p.semantic_branches:
        start = len(nodes)
        nodes.extend(branch)
        edges.extend((i, i + 1) for i in range(start, start + len(branch) - 1))
        ends.append(start + len(branch) - 1)
    agg = len(nodes)
    nodes.append(p.aggregation)
    edges.extend((e, agg) for e in ends)
    return FragmentGraph(kind=d, nodes=tuple(nodes), edges=tuple(edges), terminal=agg)


@dataclass(frozen=True)
class TransferEvent:
    """One inter-host data movement, duration fixed when it starts."""

    src_host: int
    dst_host: int
    size_mb: float
    start_s: float
    duration_s: float


def link_duration(
    src: Host, dst: Host, size_mb: float, jitter_rng: np.random.Generator | None
) -> float:
    """Transfer duration: size over the bottleneck bandwidth plus the link
    latency with Gaussian jitter, the latency term truncated at zero.

    Per-host latency figures combine as the worse endpoint, mirroring the
    min-bandwidth bottleneck. Zero when src and dst are the same host.
    """
    if src.id == dst.id:
        return 0.0
    base = max(src.latency_base_s, dst.latency_base_s)
    std = max(src.latency_jitter_std_s, dst.latency_jitter_std_s)
    jitter = float(jitter_rng.normal(0.0, std)) if (std > 0 and jitter_rng is not None) else 0.0
    latency = max(0.0, base + jitter)
    return size_mb / min(src.bandwidth_mbps, dst.bandwidth_mbps) + latency


class FragState(Enum):
    BLOCKED = "blocked"
    RUNNING = "running"
    DONE = "done"


@dataclass
class FragmentInstance:
    """Runtime state of one placed fragment."""

    fid: int
    workload_id: int
    node: int
    spec: Fragment
    host: int
    remaining_mi: float
    state: FragState
    waiting: int              # predecessor outputs not yet delivered
    pred_fids: list[int] = field(default_factory=list)
    succ_fids: list[int] = field(default_factory=list)


@dataclass(frozen=True)
class WorkloadRecord:
    """Outcome of one workload's run through the cluster."""

    workload: Workload
    decision: SplitDecision
    dispatch_s: float
    completion_s: float
    response_time_s: float
    accuracy: float
    sla_met: bool
    completed: bool = True


def response_time(record: WorkloadRecord) -> float:
    """Completion minus arrival, queueing included; errors if unfinished."""
    if not record.completed:
        raise ValueError(f"workload {record.workload.id} not completed")
    return record.response_time_s


@dataclass(frozen=True)
class EnergyAccount:
    """Cumulative joules per host plus the last interval's utilizations."""

    joules: tuple[float, ...]
    busy_s: tuple[float, ...]
    interval_utilization: tuple[float, ...]

    @property
    def total_joules(self) -> float:
        return sum(self.joules)


@dataclass
class _Transfer:
    dst_fid: int
    arrival_s: float


@dataclass
class _Work:
    workload: Workload
    decision: SplitDecision
    accuracy: float
    dispatch_s: float
    terminal_fid: int


class Engine:
    """Cluster state plus the interval-stepped event loop.

    Strictly single-threaded; with a fixed cluster, admissions and jitter
    stream, every run is bit-identical.
    """

    _MAX_EVENTS_PER_STEP = 10_000_000

    def __init__(
        self,
        cluster: ClusterConfig,
        jitter_rng: np.random.Generator | None = None,
        record_events: bool = False,
    ):
        self.cluster = cluster
        self.hosts = cluster.hosts
        self.now = 0.0
        self._jitter_rng = jitter_rng
        self._free_ram = [h.ram_mb for h in self.hosts]
        self._busy_s = [0.0 for _ in self.hosts]
        self._joules = [0.0 for _ in self.hosts]
        self._running: list[dict[int, None]] = [{} for _ in self.hosts]
        self._frags: dict[int, FragmentInstance] = {}
        self._next_fid = 0
        self._transfers: list[_Transfer] = []
        self._works: dict[int, _Work] = {}
        self._records: list[WorkloadRecord] = []
        self._last_util = tuple(0.0 for _ in self.hosts)
        self.record_events = record_events
        self.events: list[dict] = []
        self.transfer_log: list[TransferEvent] = []

    # --- scheduler-facing view ------------------------------------------

    def free_ram(self, host_id: int) -> float:
        return self._free_ram[host_id]

    def running_count(self, host_id: int) -> int:
        return len(self._running[host_id])

    # --- admission -------------------------------------------------------

    def admit(
        self,
        w: Workload,
        decision: SplitDecision,
        accuracy: float,
        graph: FragmentGraph,
        placement: dict[int, int],
    ) -> None:
        """Place every fragment of one workload, reserving RAM immediately.

        The placement must cover every node and respect free RAM; violations
        raise EngineError since schedulers guarantee feasibility.
        """
        if w.id in self._works:
            raise EngineError(f"workload {w.id} already admitted")
        if set(placement.keys()) != set(range(len(graph.nodes))):
            raise EngineError(f"placement for workload {w.id} does not cover the graph")
        need: dict[int, float] = {}
        for node, host in placement.items():
            if not 0 <= host < len(self.hosts):
                raise EngineError(f"placement names unknown host {host}")
            need[host] = need.get(host, 0.0) + graph.nodes[node].ram_mb
        for host, ram in need.items():
            if ram > self._free_ram[host] + 1e-9:
                raise EngineError(
                    f"placement infeasible: host {host} needs {ram} MB, "
                    f"free {self._free_ram[host]} MB"
                )

        preds = graph.preds()
        succs = graph.succs()
        fids = list(range(self._next_fid, self._next_fid + len(graph.nodes)))
        self._next_fid += len(graph.nodes)
        for node, frag_spec in enumerate(graph.nodes):
            host = placement[node]
            inst = FragmentInstance(
                fid=fids[node],
                workload_id=w.id,
                node=node,
                spec=frag_spec,
                host=host,
                remaining_mi=frag_spec.compute_mi,
                state=FragState.BLOCKED,
                waiting=len(preds[node]),
                pred_fids=[fids[i] for i in preds[node]],
                succ_fids=[fids[i] for i in succs[node]],
            )
            self._frags[inst.fid] = inst
            self._free_ram[host] -= frag_spec.ram_mb
            self._emit("dispatch", w.id, node, host)
            if inst.waiting == 0:
                inst.state = FragState.RUNNING
                self._running[host][inst.fid] = None
                self._emit("start", w.id, node, host)
        self._works[w.id] = _Work(
            workload=w,
            decision=decision,
            accuracy=accuracy,
            dispatch_s=self.now,
            terminal_fid=fids[graph.terminal],
        )

    # --- stepping ---------------------------------------------------------

    def step(self, dt: float) -> list[WorkloadRecord]:
        """Advance simulated time by dt with exact event subdivision.

        Returns the records of workloads that completed during this step.
        """
        if dt <= 0:
            raise EngineError(f"step duration must be > 0, got {dt}")
        target = self.now + dt
        busy_mark = list(self._busy_s)
        done_mark = len(self._records)

        for _ in range(self._MAX_EVENTS_PER_STEP):
            dt_bound = max(0.0, target - self.now)

            # per-host equal shares for the current mix
            rates = [0.0] * len(self.hosts)
            for h, running in enumerate(self._running):
                if running:
                    rates[h] = self.hosts[h].capacity_mips / len(running)

            dt_step = dt_bound
            for running in self._running:
                for fid in running:
                    f = self._frags[fid]
                    t_fin = f.remaining_mi / rates[f.host]
                    if t_fin < dt_step:
                        dt_step = t_fin
            for tr in self._transfers:
                t_arr = max(0.0, tr.arrival_s - self.now)
                if t_arr < dt_step:
                    dt_step = t_arr

            completing: list[int] = []
            for running in self._running:
                for fid in running:
                    f = self._frags[fid]
                    if f.remaining_mi / rates[f.host] == dt_step:
                        completing.append(fid)
            arriving = [
                tr for tr in self._transfers
                if max(0.0, tr.arrival_s - self.now) == dt_step
            ]

            # advance progress, busy time and energy over the slice
            for h, running in enumerate(self._running):
                host = self.hosts[h]
                if running:
                    rate = rates[h]
                    for fid in running:
                        f = self._frags[fid]
                        f.remaining_mi = max(0.0, f.remaining_mi - rate * dt_step)
                    self._busy_s[h] += dt_step
                    self._joules[h] += host.power_max_w * dt_step
                else:
                    self._joules[h] += host.power_idle_w * dt_step
            self.now += dt_step

            if not completing and not arriving:
                break  # interval boundary reached

            for tr in arriving:
                self._transfers.remove(tr)
                self._deliver(tr.dst_fid, log=True)
            for fid in sorted(completing):
                self._complete(fid)

        else:
            raise EngineError("event subdivision failed to terminate")

        self._last_util = tuple(
            (self._busy_s[h] - busy_mark[h]) / dt for h in range(len(self.hosts))
        )
        return self._records[done_mark:]

    def _deliver(self, dst_fid: int, log: bool) -> None:
        f = self._frags[dst_fid]
        f.waiting -= 1
        if log:
            self._emit("transfer_end", f.workload_id, f.node, f.host)
        if f.waiting == 0 and f.state is FragState.BLOCKED:
            f.state = FragState.RUNNING
            self._running[f.host][f.fid] = None
            self._emit("start", f.workload_id, f.node, f.host)

    def _complete(self, fid: int) -> None:
        f = self._frags[fid]
        f.remaining_mi = 0.0
        f.state = FragState.DONE
        del self._running[f.host][fid]
        self._free_ram[f.host] += f.spec.ram_mb
        self._emit("finish", f.workload_id, f.node, f.host)

        for succ_fid in f.succ_fids:
            s = self._frags[succ_fid]
            if s.host == f.host:
                self._deliver(succ_fid, log=False)
                continue
            duration = link_duration(
                self.hosts[f.host], self.hosts[s.host], f.spec.output_mb, self._jitter_rng
            )
            self._emit("transfer_start", f.workload_id, f.node, f.host)
            if self.record_events:
                self.transfer_log.append(
                    TransferEvent(
                        src_host=f.host,
                        dst_host=s.host,
                        size_mb=f.spec.output_mb,
                        start_s=self.now,
                        duration_s=duration,
                    )
                )
            if duration == 0.0:
                self._deliver(succ_fid, log=True)
            else:
                self._transfers.append(_Transfer(dst_fid=succ_fid, arrival_s=self.now + duration))

        work = self._works[f.workload_id]
        if fid == work.terminal_fid:
            w = work.workload
            record = WorkloadRecord(
                workload=w,
                decision=work.decision,
                dispatch_s=work.dispatch_s,
                completion_s=self.now,
                response_time_s=self.now - w.arrival_s,
                accuracy=work.accuracy,
                sla_met=(self.now - w.arrival_s) <= w.sla_s,
            )
            self._records.append(record)
            del self._works[f.workload_id]
            self._emit("complete", f.workload_id, f.node, f.host)

    def _emit(self, kind: str, workload: int, fragment: int | None, host: int | None) -> None:
        if self.record_events:
            self.events.append(
                {"t": self.now, "kind": kind, "workload": workload,
                 "fragment": fragment, "host": host}
            )

    # --- accounting and inspection ---------------------------------------

    def energy_account(self) -> EnergyAccount:
        return EnergyAccount(
            joules=tuple(self._joules),
            busy_s=tuple(self._busy_s),
            interval_utilization=self._last_util,
        )

    def total_joules(self) -> float:
        return sum(self._joules)

    def total_mi_completed(self) -> float:
        """Work done so far, summed over every fragment ever admitted."""
        return sum(f.spec.compute_mi - f.remaining_mi for f in self._frags.values())

    def capacity_busy_integral(self) -> float:
        """Integral of capacity over busy time, summed over hosts."""
        return sum(
            h.capacity_mips * self._busy_s[h.id] for h in self.hosts
        )

    def fragments(self) -> list[FragmentInstance]:
        return list(self._frags.values())

    def records(self) -> list[WorkloadRecord]:
        return list(self._records)

    def open_workloads(self) -> list[tuple[Workload, SplitDecision, float, float]]:
        """Admitted but unfinished workloads as (workload, decision, accuracy, dispatch)."""
        return [
            (wk.workload, wk.decision, wk.accuracy, wk.dispatch_s)
            for wk in self._works.values()
        ]

    def idle(self) -> bool:
        return not self._works and not self._transfers


def write_event_log(events: list[dict], path: str) -> None:
    """Dump engine events as JSON lines for external checking."""
    import json

    with open(path, "w", encoding="utf-8") as fh:
        for e in events:
            fh.write(json.dumps(e))
            fh.write("\n")
