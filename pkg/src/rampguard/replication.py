"""Replicated experiment runs with per-replication random streams.

Every replication owns a random stream keyed by (seed, replication index),
so results are bitwise reproducible for a given seed and configuration no
matter how the replications are distributed over worker processes. The
aggregation walks replications in index order, which keeps summaries
byte-identical across worker counts.
"""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .mc_solver import CostFunction, TreatmentEffectCost, run_cantelli_experiment
from .posterior import GaussianPrior, OutcomeVariance, VariancePolicy
from .scenarios import Scenario, ScenarioFeed
from .schedules import RiskSchedule
from .solver import run_rrc_experiment
from .thompson import ThompsonConfig, run_thompson_experiment

__all__ = [
    "AnalyticPolicy",
    "CantelliPolicy",
    "ThompsonPolicy",
    "CompactTrace",
    "ReplicationSummary",
    "run_replications",
    "resolve_workers",
    "replication_stream",
]

QUANTILE_LEVELS = (25.0, 50.0, 75.0)


def replication_stream(seed: int, *key: int) -> np.random.Generator:
    """Independent generator for a (seed, key...) address."""
    return np.random.default_rng(np.random.SeedSequence((int(seed),) + tuple(key)))


@dataclass(frozen=True)
class AnalyticPolicy:
    """Run the closed-form ramp solver."""

    prior: GaussianPrior
    variance: VariancePolicy


@dataclass(frozen=True)
class CantelliPolicy:
    """Run the Monte-Carlo Cantelli solver."""

    prior: GaussianPrior
    variance: VariancePolicy
    samples: int = 10_000
    cost: CostFunction = TreatmentEffectCost()


@dataclass(frozen=True)
class ThompsonPolicy:
    """Run the Thompson-sampling baseline.

    ``sigma_sq`` fixes the model variances; None falls back to the feed's
    stage-1 ground truth.
    """

    c: float
    prior: GaussianPrior
    sigma_sq: "tuple[float, float] | None" = None
    cap_at_half: bool = False


Policy = "AnalyticPolicy | CantelliPolicy | ThompsonPolicy"


@dataclass(frozen=True)
class CompactTrace:
    """Per-stage essentials of one replication, in stage order."""

    m: tuple[int, ...]
    branch: tuple[str, ...]
    stage_cost: tuple[float, ...]
    cum_cost: tuple[float, ...]

    @property
    def total_cost(self) -> float:
        return self.cum_cost[-1] if self.cum_cost else 0.0


def _compact(trace) -> CompactTrace:
    return CompactTrace(
        m=tuple(r.m for r in trace.records),
        branch=tuple(r.branch for r in trace.records),
        stage_cost=tuple(r.stage_cost for r in trace.records),
        cum_cost=tuple(r.cum_cost for r in trace.records),
    )


def _run_one(policy, scenario: Scenario, schedule: RiskSchedule, seed: int, rep: int):
    feed_rng = replication_stream(seed, rep, 0)
    if isinstance(policy, AnalyticPolicy):
        feed = ScenarioFeed(scenario, feed_rng)
        trace = run_rrc_experiment(policy.prior, policy.variance, schedule, feed)
    elif isinstance(policy, CantelliPolicy):
        feed = ScenarioFeed(scenario, feed_rng, keep_treated=True)
        trace = run_cantelli_experiment(
            policy.prior,
            policy.variance,
            schedule,
            feed,
            cost=policy.cost,
            samples_per_stage=policy.samples,
            sample_rng=lambda t: replication_stream(seed, rep, t),
        )
    elif isinstance(policy, ThompsonPolicy):
        feed = ScenarioFeed(scenario, feed_rng)
        sigma_sq = policy.sigma_sq or feed.true_variance(1)
        config = ThompsonConfig(
            c=policy.c,
            prior=policy.prior,
            variance=OutcomeVariance(sigma_sq),
            cap_at_half=policy.cap_at_half,
        )
        trace = run_thompson_experiment(config, feed, feed_rng, budget=schedule.budget)
    else:
        raise TypeError(f"unknown policy type {type(policy).__name__}")
    return _compact(trace)


def _run_chunk(policy, scenario, schedule, seed, reps):
    return [_run_one(policy, scenario, schedule, seed, rep) for rep in reps]


@dataclass
class ReplicationSummary:
    """Ruin rate and per-stage quantile curves over all replications."""

    ruin_rate: float
    ruin_half_width: float
    replications: int
    seed: int
    stages: int
    budget: float
    delta: float
    m_quantiles: np.ndarray  # shape (3, stages): rows q25, q50, q75
    surplus_quantiles: np.ndarray  # shape (3, stages)
    final_costs: np.ndarray  # shape (replications,)
    traces: "list[CompactTrace] | None" = None

    def to_json_dict(self) -> dict:
        return {
            "ruin_rate": self.ruin_rate,
            "ruin_half_width": self.ruin_half_width,
            "replications": self.replications,
            "seed": self.seed,
            "stages": self.stages,
            "budget": self.budget,
            "delta": self.delta,
            "m_quantiles": {
                "q25": [float(v) for v in self.m_quantiles[0]],
                "q50": [float(v) for v in self.m_quantiles[1]],
                "q75": [float(v) for v in self.m_quantiles[2]],
            },
            "surplus_quantiles": {
                "q25": [float(v) for v in self.surplus_quantiles[0]],
                "q50": [float(v) for v in self.surplus_quantiles[1]],
                "q75": [float(v) for v in self.surplus_quantiles[2]],
            },
        }


def resolve_workers(explicit: "int | None" = None) -> int:
    """Worker count: explicit argument, then RAMPGUARD_THREADS, then CPUs."""
    if explicit is not None:
        return max(1, int(explicit))
    env = os.environ.get("RAMPGUARD_THREADS")
    if env:
        return max(1, int(env))
    return min(os.cpu_count() or 1, 8)


def run_replications(
    policy,
    scenario: Scenario,
    schedule: RiskSchedule,
    K_rep: int,
    seed: int = 0,
    *,
    workers: int = 1,
    keep_traces: bool = False,
) -> ReplicationSummary:
    """Run K_rep independent experiments and summarize them.

    Ruin is accounted on the true (counterfactual-aware) costs: a
    replication is ruined when its final cumulative cost is at or below the
    budget. Quantile curves cover the treated-group sizes and the running
    budget surplus per stage.
    """
    if K_rep < 1:
        raise ValueError(f"K_rep must be >= 1, got {K_rep!r}")
    workers = max(1, int(workers))

    if workers == 1 or K_rep == 1:
        traces = [_run_one(policy, scenario, schedule, seed, rep) for rep in range(K_rep)]
    else:
        chunk_count = min(K_rep, workers * 4)
        chunks = [list(range(i, K_rep, chunk_count)) for i in range(chunk_count)]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [
                pool.submit(_run_chunk, policy, scenario, schedule, seed, chunk)
                for chunk in chunks
            ]
            traces = [None] * K_rep
            for chunk, fut in zip(chunks, futures):
                for rep, trace in zip(chunk, fut.result()):
                    traces[rep] = trace

    stages = len(traces[0].m)
    if any(len(t.m) != stages for t in traces):
        raise RuntimeError("replications produced traces of different lengths")

    m_matrix = np.array([t.m for t in traces], dtype=float)
    cum_matrix = np.array([t.cum_cost for t in traces], dtype=float)
    final_costs = cum_matrix[:, -1] if stages else np.zeros(K_rep)
    ruined = final_costs <= schedule.budget
    ruin_rate = float(ruined.mean())
    half_width = 1.96 * float(np.sqrt(ruin_rate * (1.0 - ruin_rate) / K_rep))

    if stages:
        m_quant = np.percentile(m_matrix, QUANTILE_LEVELS, axis=0)
        surplus_quant = np.percentile(cum_matrix - schedule.budget, QUANTILE_LEVELS, axis=0)
    else:
        m_quant = np.zeros((3, 0))
        surplus_quant = np.zeros((3, 0))

    return ReplicationSummary(
        ruin_rate=ruin_rate,
        ruin_half_width=half_width,
        replications=K_rep,
        seed=seed,
        stages=stages,
        budget=schedule.budget,
        delta=schedule.delta,
        m_quantiles=m_quant,
        surplus_quantiles=surplus_quant,
        final_costs=final_costs,
        traces=traces if keep_traces else None,
    )
