"""Split decision core: per-application execution-time estimates, the
deadline-derived context, one UCB1 bandit per context over the two split
arms, and the reward that ties them together.

The reward for one finished workload is (1[response <= deadline] +
accuracy) / 2; a run's reward is the mean of these. Layer-split completions
also refresh the application's moving-average time estimate, which is what
classifies future workloads as Tight (deadline below the estimate) or
Loose.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Mapping

from .model import ApplicationProfile, SplitDecision, Workload, prior_layer_seconds


class Context(Enum):
    TIGHT = "tight"
    LOOSE = "loose"


@dataclass(frozen=True)
class WorkloadOutcome:
    """What a finished workload looked like, for reward computation."""

    response_time_s: float
    sla_s: float
    accuracy: float
    decision: SplitDecision
    app: str


def reward_of(o: WorkloadOutcome) -> float:
    """Per-workload reward in [0, 1]; meeting the deadline exactly counts."""
    met = 1.0 if o.response_time_s <= o.sla_s else 0.0
    return (met + o.accuracy) / 2.0


def aggregate_reward(outcomes: Iterable[WorkloadOutcome]) -> float:
    """Mean per-workload reward, i.e. sum of indicator+accuracy over 2|W|."""
    outcomes = list(outcomes)
    if not outcomes:
        raise ValueError("aggregate_reward undefined for empty workload set")
    return sum(reward_of(o) for o in outcomes) / len(outcomes)


class EmaEstimator:
    """Per-application exponential moving average of layer-split response time.

    Applications start from a compute-based prior so the estimate exists
    before the first observation; the first observation replaces the prior,
    later ones blend in with weight `alpha`.
    """

    def __init__(self, alpha: float = 0.1):
        if not 0.0 < alpha <= 1.0:
            raise ValueError(f"alpha must be in (0, 1], got {alpha}")
        self.alpha = alpha
        self._value: dict[str, float] = {}
        self._observed: set[str] = set()

    def register_prior(self, app: str, prior_s: float) -> None:
        if prior_s <= 0:
            raise ValueError(f"prior for {app!r} must be > 0, got {prior_s}")
        if app not in self._observed:
            self._value[app] = prior_s

    def known(self, app: str) -> bool:
        return app in self._value

    def value(self, app: str) -> float:
        if app not in self._value:
            raise KeyError(f"no estimate for application {app!r}")
        return self._value[app]

    def update(self, app: str, observed_s: float) -> None:
        if not (observed_s > 0 and math.isfinite(observed_s)):
            raise ValueError(f"observation must be > 0, got {observed_s}")
        if app in self._observed:
            self._value[app] = self.alpha * observed_s + (1 - self.alpha) * self._value[app]
        else:
            self._value[app] = observed_s
            self._observed.add(app)


def context_of(estimates: EmaEstimator, w: Workload) -> Context:
    """Tight iff the deadline is strictly below the layer-time estimate."""
    if not estimates.known(w.app):
        raise KeyError(f"unknown application {w.app!r}")
    return Context.TIGHT if w.sla_s < estimates.value(w.app) else Context.LOOSE


@dataclass
class ArmStats:
    n: int = 0
    q: float = 0.0


class BanditState:
    """Two UCB1 bandits, one per context, each over the two split arms."""

    def __init__(self, c: float = math.sqrt(2)):
        if c < 0:
            raise ValueError(f"exploration constant must be >= 0, got {c}")
        self.c = c
        self._arms: dict[Context, dict[SplitDecision, ArmStats]] = {
            ctx: {arm: ArmStats() for arm in SplitDecision} for ctx in Context
        }

    def total(self, ctx: Context) -> int:
        return sum(a.n for a in self._arms[ctx].values())

    def stats(self, ctx: Context, arm: SplitDecision) -> ArmStats:
        return self._arms[ctx][arm]

    def select_arm(self, ctx: Context) -> SplitDecision:
        """Untried arms first (Layer before Semantic), then the UCB1 argmax
        Q + c*sqrt(ln N / n) with ties broken toward Layer."""
        arms = self._arms[ctx]
        for arm in SplitDecision:
            if arms[arm].n == 0:
                return arm
        n_total = self.total(ctx)
        best, best_score = None, -math.inf
        for arm in SplitDecision:
            s = arms[arm]
            score = s.q + self.c * math.sqrt(math.log(n_total) / s.n)
            if score > best_score:
                best, best_score = arm, score
        return best

    def update_arm(self, ctx: Context, arm: SplitDecision, reward: float) -> None:
        if not (0.0 <= reward <= 1.0):
            raise ValueError(f"reward must be in [0, 1], got {reward}")
        s = self._arms[ctx][arm]
        s.n += 1
        s.q += (reward - s.q) / s.n

    def summary(self) -> dict:
        return {
            ctx.value: {
                "total": self.total(ctx),
                "arms": {
                    arm.value: {"n": self._arms[ctx][arm].n, "q": self._arms[ctx][arm].q}
                    for arm in SplitDecision
                },
            }
            for ctx in Context
        }


class SplitDecider:
    """Full decision pipeline: estimate -> context -> bandit arm, with
    completion feedback routed back to the pending decision's context/arm.

    State is a single mutable unit; callers serialize decide/feedback.
    """

    def __init__(
        self,
        profiles: Mapping[str, ApplicationProfile],
        alpha: float = 0.1,
        ucb_c: float = math.sqrt(2),
    ):
        self.estimates = EmaEstimator(alpha)
        for name, p in profiles.items():
            self.estimates.register_prior(name, prior_layer_seconds(p))
        self.bandit = BanditState(ucb_c)
        self._pending: dict[int, tuple[Context, SplitDecision, str]] = {}

    def decide(self, w: Workload) -> SplitDecision:
        if w.id in self._pending:
            raise ValueError(f"workload {w.id} already has a pending decision")
        ctx = context_of(self.estimates, w)
        arm = self.bandit.select_arm(ctx)
        self._pending[w.id] = (ctx, arm, w.app)
        return arm

    def feedback(self, workload_id: int, outcome: WorkloadOutcome) -> None:
        """Apply the completion reward to the arm that decided this workload;
        layer completions also update the application's time estimate."""
        if workload_id not in self._pending:
            raise KeyError(f"no pending decision for workload {workload_id}")
        ctx, arm, app = self._pending.pop(workload_id)
        self.bandit.update_arm(ctx, arm, reward_of(outcome))
        if arm is SplitDecision.LAYER:
            self.estimates.update(app, outcome.response_time_s)

    def pending_count(self) -> int:
        return len(self._pending)

    def summary(self) -> dict:
        return self.bandit.summary()
