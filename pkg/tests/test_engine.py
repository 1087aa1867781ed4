from __future__ import annotations

import math

import pytest

from conftest import make_cluster, make_host, make_profile
from engine_scenarios import SCENARIOS, chain, frag, run_scenario
from splitsim import rng
from splitsim.engine import (
    Engine,
    EngineError,
    WorkloadRecord,
    instantiate,
    link_duration,
    response_time,
)
from splitsim.model import SplitDecision, Workload


@pytest.mark.parametrize("scenario", SCENARIOS, ids=lambda s: s.name)
def test_completion_times_match_hand_oracle(scenario):
    got = run_scenario(scenario)
    assert got.keys() == scenario.expected.keys()
    for wid, t in scenario.expected.items():
        assert got[wid] == pytest.approx(t, abs=1e-9), scenario.name


@pytest.mark.parametrize("dt", [0.25, 0.5, 1.0, 10.0])
def test_completion_times_independent_of_interval(dt):
    # the interval only batches admissions; fluid subdivision keeps times exact
    s = SCENARIOS[15]  # ps_three_way_drain, all admits at t=0
    got = run_scenario(s, dt=dt)
    for wid, t in s.expected.items():
        assert got[wid] == pytest.approx(t, abs=1e-9)


class TestInstantiate:
    def test_layer_chain_structure(self, profile):
        g = instantiate(Workload(0, 0.0, "app", 1.0), SplitDecision.LAYER, profile)
        assert len(g.nodes) == 4
        assert len(g.edges) == 3
        assert g.edges == ((0, 1), (1, 2), (2, 3))
        assert g.terminal == 3

    def test_semantic_star_structure(self, profile):
        g = instantiate(Workload(0, 0.0, "app", 1.0), SplitDecision.SEMANTIC, profile)
        assert len(g.nodes) == 5
        assert len(g.edges) == 4
        assert all(b == 4 for _, b in g.edges)
        assert g.terminal == 4

    def test_single_fragment_chain(self):
        p = make_profile(layer_mi=(1000.0,))
        g = instantiate(Workload(0, 0.0, "app", 1.0), SplitDecision.LAYER, p)
        assert len(g.nodes) == 1
        assert g.edges == ()
        assert g.terminal == 0


class TestTransferDuration:
    def test_size_plus_latency(self):
        a = make_host(0, bw=10.0, lat=0.1)
        b = make_host(1, bw=20.0, lat=0.1)
        assert link_duration(a, b, 5.0, None) == pytest.approx(0.6, abs=1e-12)

    def test_same_host_is_free(self):
        a = make_host(0, bw=10.0, lat=0.1)
        assert link_duration(a, a, 500.0, None) == 0.0

    def test_jitter_never_negative(self):
        # latency term is truncated at zero, so duration >= size/bw
        a = make_host(0, bw=10.0, lat=0.001, jitter=0.5)
        b = make_host(1, bw=10.0, lat=0.001, jitter=0.5)
        gen = rng.stream(123, "jitter")
        floor = 5.0 / 10.0
        for _ in range(2000):
            assert link_duration(a, b, 5.0, gen) >= floor

    def test_jitter_reproducible(self):
        a = make_host(0, bw=10.0, lat=0.05, jitter=0.01)
        b = make_host(1, bw=10.0, lat=0.05, jitter=0.01)
        d1 = [link_duration(a, b, 1.0, rng.stream(7, "jitter")) for _ in range(3)]
        d2 = [link_duration(a, b, 1.0, rng.stream(7, "jitter")) for _ in range(3)]
        assert d1 == d2


class TestEnergy:
    def _engine(self, idle=3.0, mx=7.0):
        cl = make_cluster([make_host(0, 1000.0, idle_w=idle, max_w=mx)])
        return Engine(cl, rng.stream(0, "jitter"))

    def test_idle_host_draws_idle_power(self):
        eng = self._engine()
        eng.step(10.0)
        assert eng.total_joules() == pytest.approx(30.0, abs=1e-9)
        assert eng.energy_account().interval_utilization == (0.0,)

    def test_fully_busy_draws_max_power(self):
        eng = self._engine()
        eng.admit(Workload(0, 0.0, "a", 100.0), SplitDecision.LAYER, 1.0,
                  chain(frag(10000)), {0: 0})
        eng.step(10.0)
        assert eng.total_joules() == pytest.approx(70.0, abs=1e-9)
        assert eng.energy_account().interval_utilization == (1.0,)

    def test_half_utilization_interpolates(self):
        eng = self._engine()
        eng.admit(Workload(0, 0.0, "a", 100.0), SplitDecision.LAYER, 1.0,
                  chain(frag(5000)), {0: 0})
        eng.step(10.0)
        assert eng.total_joules() == pytest.approx(50.0, abs=1e-9)
        assert eng.energy_account().interval_utilization == (0.5,)

    def test_energy_monotone_nondecreasing(self):
        eng = self._engine()
        eng.admit(Workload(0, 0.0, "a", 100.0), SplitDecision.LAYER, 1.0,
                  chain(frag(3000)), {0: 0})
        last = 0.0
        for _ in range(6):
            eng.step(1.0)
            now = eng.total_joules()
            assert now >= last
            last = now


class TestRecords:
    def test_response_time_is_completion_minus_arrival(self):
        # arrival 10.0, admitted at the t=10 epoch, done 4.5 s later
        cl = make_cluster([make_host(0, 1000.0)])
        eng = Engine(cl, rng.stream(0, "jitter"))
        for _ in range(10):
            eng.step(1.0)
        eng.admit(Workload(0, 10.0, "a", 100.0), SplitDecision.LAYER, 1.0,
                  chain(frag(4500)), {0: 0})
        recs = []
        for _ in range(6):
            recs += eng.step(1.0)
        assert recs[0].completion_s == pytest.approx(14.5, abs=1e-9)
        assert response_time(recs[0]) == pytest.approx(4.5, abs=1e-9)

    def test_queue_wait_counts_toward_response(self):
        # dispatched one epoch after arrival: response includes the wait
        cl = make_cluster([make_host(0, 1000.0)])
        eng = Engine(cl, rng.stream(0, "jitter"))
        eng.step(1.0)
        eng.admit(Workload(0, 0.5, "a", 100.0), SplitDecision.LAYER, 1.0,
                  chain(frag(1000)), {0: 0})
        recs = eng.step(1.0)
        assert recs[0].completion_s == pytest.approx(2.0, abs=1e-9)
        assert recs[0].response_time_s == pytest.approx(1.5, abs=1e-9)

    def test_incomplete_record_raises(self):
        rec = WorkloadRecord(
            workload=Workload(0, 0.0, "a", 1.0),
            decision=SplitDecision.LAYER,
            dispatch_s=math.inf,
            completion_s=math.inf,
            response_time_s=math.inf,
            accuracy=0.0,
            sla_met=False,
            completed=False,
        )
        with pytest.raises(ValueError):
            response_time(rec)

    def test_sla_met_boundary_inclusive(self):
        cl = make_cluster([make_host(0, 1000.0)])
        eng = Engine(cl, rng.stream(0, "jitter"))
        eng.admit(Workload(0, 0.0, "a", 2.0), SplitDecision.LAYER, 1.0,
                  chain(frag(2000)), {0: 0})
        recs = []
        for _ in range(3):
            recs += eng.step(1.0)
        assert recs[0].response_time_s == pytest.approx(2.0, abs=1e-12)
        assert recs[0].sla_met


class TestAdmission:
    def test_ram_reserved_and_released(self):
        cl = make_cluster([make_host(0, 1000.0, ram=1000.0)])
        eng = Engine(cl, rng.stream(0, "jitter"))
        g = chain(frag(1000, ram=800.0))
        eng.admit(Workload(0, 0.0, "a", 10.0), SplitDecision.LAYER, 1.0, g, {0: 0})
        assert eng.free_ram(0) == pytest.approx(200.0)
        eng.step(2.0)
        assert eng.free_ram(0) == pytest.approx(1000.0)

    def test_overcommit_rejected(self):
        cl = make_cluster([make_host(0, 1000.0, ram=1000.0)])
        eng = Engine(cl, rng.stream(0, "jitter"))
        g = chain(frag(1000, ram=600.0), frag(1000, ram=600.0))
        with pytest.raises(EngineError):
            eng.admit(Workload(0, 0.0, "a", 10.0), SplitDecision.LAYER, 1.0, g, {0: 0, 1: 0})

    def test_duplicate_admit_rejected(self):
        cl = make_cluster([make_host(0, 1000.0)])
        eng = Engine(cl, rng.stream(0, "jitter"))
        eng.admit(Workload(0, 0.0, "a", 10.0), SplitDecision.LAYER, 1.0,
                  chain(frag(100)), {0: 0})
        with pytest.raises(EngineError):
            eng.admit(Workload(0, 0.0, "a", 10.0), SplitDecision.LAYER, 1.0,
                      chain(frag(100)), {0: 0})

    def test_partial_placement_rejected(self):
        cl = make_cluster([make_host(0, 1000.0)])
        eng = Engine(cl, rng.stream(0, "jitter"))
        g = chain(frag(100), frag(100))
        with pytest.raises(EngineError):
            eng.admit(Workload(0, 0.0, "a", 10.0), SplitDecision.LAYER, 1.0, g, {0: 0})


class TestEventLog:
    def test_events_carry_exact_keys(self):
        cl = make_cluster([make_host(0, 1000.0), make_host(1, 1000.0)])
        eng = Engine(cl, rng.stream(0, "jitter"), record_events=True)
        g = chain(frag(500, out=1.0), frag(500))
        eng.admit(Workload(0, 0.0, "a", 10.0), SplitDecision.LAYER, 1.0, g, {0: 0, 1: 1})
        for _ in range(3):
            eng.step(1.0)
        assert eng.events
        for e in eng.events:
            assert set(e) == {"t", "kind", "workload", "fragment", "host"}
        kinds = [e["kind"] for e in eng.events]
        for expected in ("dispatch", "start", "finish", "transfer_start", "transfer_end", "complete"):
            assert expected in kinds

    def test_event_log_round_trips_as_json_lines(self, tmp_path):
        import json

        from splitsim.engine import write_event_log

        cl = make_cluster([make_host(0, 1000.0)])
        eng = Engine(cl, rng.stream(0, "jitter"), record_events=True)
        eng.admit(Workload(0, 0.0, "a", 10.0), SplitDecision.LAYER, 1.0,
                  chain(frag(500)), {0: 0})
        eng.step(1.0)
        path = tmp_path / "events.jsonl"
        write_event_log(eng.events, str(path))
        parsed = [json.loads(line) for line in path.read_text().splitlines()]
        assert parsed == eng.events

    def test_start_only_after_predecessors_finish(self):
        cl = make_cluster([make_host(0, 1000.0), make_host(1, 1000.0)])
        eng = Engine(cl, rng.stream(0, "jitter"), record_events=True)
        g = chain(frag(500, out=2.0), frag(500))
        eng.admit(Workload(0, 0.0, "a", 10.0), SplitDecision.LAYER, 1.0, g, {0: 0, 1: 1})
        for _ in range(3):
            eng.step(1.0)
        t_finish_pred = next(
            e["t"] for e in eng.events if e["kind"] == "finish" and e["fragment"] == 0
        )
        t_start_succ = next(
            e["t"] for e in eng.events if e["kind"] == "start" and e["fragment"] == 1
        )
        assert t_start_succ >= t_finish_pred


class TestConservation:
    def test_work_conservation_exact(self):
        s = SCENARIOS[21]  # transfer_into_busy_host exercises both hosts
        eng = Engine(s.cluster, rng.stream(0, "jitter"))
        for epoch, wid, graph, placement in s.admits:
            eng.admit(Workload(wid, epoch, "a", 1e9), graph.kind, 1.0, graph, placement)
        for _ in range(8):
            eng.step(1.0)
        done = eng.total_mi_completed()
        integral = eng.capacity_busy_integral()
        assert abs(done - integral) <= 1e-9 * max(done, 1.0)

    def test_blocked_fragments_make_no_progress(self):
        cl = make_cluster([make_host(0, 1000.0)])
        eng = Engine(cl, rng.stream(0, "jitter"))
        g = chain(frag(2000), frag(1000))
        eng.admit(Workload(0, 0.0, "a", 10.0), SplitDecision.LAYER, 1.0, g, {0: 0, 1: 0})
        eng.step(1.0)
        states = {f.node: f for f in eng.fragments()}
        assert states[1].remaining_mi == states[1].spec.compute_mi
