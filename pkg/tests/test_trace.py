from __future__ import annotations

import json

import pytest

from conftest import make_profile
from splitsim.model import ConfigError, prior_layer_seconds
from splitsim.trace import TraceSpec, generate, load_trace, save_trace, spec_from_dict, spec_to_dict


def spec(**kw) -> TraceSpec:
    base = dict(
        horizon_s=100.0,
        lambda_per_interval=2.0,
        app_mix={"app": 1.0},
        sla_multiplier_range=(0.5, 2.0),
        seed=5,
    )
    base.update(kw)
    return TraceSpec(**base)


@pytest.fixture
def profiles():
    return {"app": make_profile()}


class TestGenerate:
    def test_zero_rate_gives_empty_trace(self, profiles):
        assert generate(spec(lambda_per_interval=0.0), profiles) == []

    def test_collapsed_multiplier_pins_sla_to_prior(self, profiles):
        trace = generate(spec(sla_multiplier_range=(1.0, 1.0)), profiles)
        prior = prior_layer_seconds(profiles["app"])
        assert trace
        assert all(w.sla_s == prior for w in trace)

    def test_regeneration_is_byte_identical(self, profiles, tmp_path):
        t1 = generate(spec(), profiles)
        t2 = generate(spec(), profiles)
        p1, p2 = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
        save_trace(t1, str(p1))
        save_trace(t2, str(p2))
        assert p1.read_bytes() == p2.read_bytes()

    def test_ids_dense_and_sorted(self, profiles):
        trace = generate(spec(), profiles)
        assert [w.id for w in trace] == list(range(len(trace)))
        arrivals = [w.arrival_s for w in trace]
        assert arrivals == sorted(arrivals)
        assert all(0 <= w.arrival_s < 100.0 for w in trace)

    def test_unknown_app_rejected(self, profiles):
        with pytest.raises(KeyError):
            generate(spec(app_mix={"ghost": 1.0}), profiles)

    def test_mix_must_sum_to_one(self, profiles):
        with pytest.raises(ValueError):
            generate(spec(app_mix={"app": 0.7}), profiles)

    def test_workloads_satisfy_invariants(self, profiles):
        for w in generate(spec(), profiles):
            assert w.errors() == []

    def test_interval_scales_batching(self, profiles):
        # halving the interval halves the per-interval mean; totals stay close
        t1 = generate(spec(seed=11), profiles, interval_s=1.0)
        assert len(t1) > 150  # ~200 expected

    def test_app_mix_chi_square_regression(self):
        profs = {
            "a": make_profile("a"),
            "b": make_profile("b"),
            "c": make_profile("c"),
        }
        mix = {"a": 0.5, "b": 0.3, "c": 0.2}
        trace = generate(
            spec(horizon_s=1000.0, lambda_per_interval=10.0, app_mix=mix, seed=17), profs
        )
        n = len(trace)
        assert n > 9000
        counts = {k: 0 for k in mix}
        for w in trace:
            counts[w.app] += 1
        chi2 = sum((counts[k] - n * p) ** 2 / (n * p) for k, p in mix.items())
        # df=2 critical value at p=0.001
        assert chi2 < 13.8155


class TestPersistence:
    def test_round_trip(self, profiles, tmp_path):
        trace = generate(spec(horizon_s=500.0, lambda_per_interval=2.0), profiles)
        assert len(trace) >= 900
        path = tmp_path / "trace.jsonl"
        save_trace(trace, str(path))
        assert load_trace(str(path)) == trace

    def test_negative_sla_rejected_with_line(self, tmp_path):
        path = tmp_path / "trace.jsonl"
        lines = [
            json.dumps({"id": 0, "arrival_s": 0.0, "app": "a", "sla_s": 1.0}),
            json.dumps({"id": 1, "arrival_s": 1.0, "app": "a", "sla_s": -2.0}),
        ]
        path.write_text("\n".join(lines) + "\n")
        with pytest.raises(ConfigError, match="line 2"):
            load_trace(str(path))

    def test_empty_file_is_empty_trace(self, tmp_path):
        path = tmp_path / "trace.jsonl"
        path.write_text("")
        assert load_trace(str(path)) == []

    def test_malformed_line_reported(self, tmp_path):
        path = tmp_path / "trace.jsonl"
        path.write_text('{"id": 0, "arrival_s": 0.0, "app": "a", "sla_s": 1.0}\nnot json\n')
        with pytest.raises(ConfigError, match="line 2"):
            load_trace(str(path))

    def test_wrong_keys_reported(self, tmp_path):
        path = tmp_path / "trace.jsonl"
        path.write_text(json.dumps({"id": 0, "t": 0.0, "app": "a", "sla_s": 1.0}) + "\n")
        with pytest.raises(ConfigError, match="expected keys"):
            load_trace(str(path))

    def test_duplicate_ids_rejected(self, tmp_path):
        path = tmp_path / "trace.jsonl"
        line = json.dumps({"id": 0, "arrival_s": 0.0, "app": "a", "sla_s": 1.0})
        path.write_text(line + "\n" + line + "\n")
        with pytest.raises(ConfigError, match="duplicate workload id"):
            load_trace(str(path))

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError):
            load_trace(str(tmp_path / "absent.jsonl"))


class TestSpecSerialization:
    def test_round_trip(self):
        s = spec(app_mix={"a": 0.5, "b": 0.5})
        assert spec_from_dict(spec_to_dict(s)) == s

    def test_unknown_key_rejected(self):
        d = spec_to_dict(spec())
        d["surprise"] = 1
        with pytest.raises(ConfigError, match="unknown keys"):
            spec_from_dict(d)

    def test_bad_range_rejected(self):
        d = spec_to_dict(spec())
        d["sla_multiplier_range"] = [2.0, 0.5]
        with pytest.raises(ConfigError, match="invalid"):
            spec_from_dict(d)
