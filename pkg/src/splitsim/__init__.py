"""Deterministic discrete-event simulator for split neural network inference
on resource-constrained edge clusters, with a learned split decision layer
and pluggable fragment placement."""

from .decider import (
    BanditState,
    Context,
    EmaEstimator,
    SplitDecider,
    WorkloadOutcome,
    aggregate_reward,
    context_of,
    reward_of,
)
from .engine import (
    Engine,
    EnergyAccount,
    EngineError,
    FragmentGraph,
    TransferEvent,
    WorkloadRecord,
    instantiate,
    link_duration,
    response_time,
)
from .metrics import MetricsReport, aggregate, export, export_comparison, summarize
from .model import (
    ApplicationProfile,
    ClusterConfig,
    ConfigError,
    Fragment,
    Host,
    SplitDecision,
    Workload,
    compressed_variant,
    default_cluster,
    default_profiles,
    load_cluster,
    load_profiles,
    prior_layer_seconds,
    validate_profile,
)
from .runner import RunConfig, SimResult, benchmark_trace_spec, compare, run, simulate
from .schedulers import SCHEDULERS, place_first_fit, place_least_loaded, place_random
from .trace import TraceSpec, generate, load_trace, save_trace

__version__ = "0.1.0"
