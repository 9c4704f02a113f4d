"""Experiment traces and the stage-feed interface shared by all runners."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Protocol

import numpy as np

if TYPE_CHECKING:
    from .posterior import PosteriorState, SufficientStats

__all__ = ["StageOutcome", "StageRecord", "ExperimentTrace", "StageFeed"]


@dataclass(frozen=True)
class StageOutcome:
    """What one experiment stage produced, as seen by the runner.

    The sums and sums of squares are the observable side (treated outcomes
    under treatment, control outcomes under control). ``true_cost`` is the
    simulator-side sum of per-treated-unit effects, which requires both
    potential outcomes and is never observable in a real deployment.
    ``treated_outcomes`` carries the individual observed treated values when
    a runner needs them (the Monte-Carlo solver does), else None.
    """

    treated_sum: float
    treated_sumsq: float
    control_sum: float
    control_sumsq: float
    true_cost: float
    treated_outcomes: "np.ndarray | None" = None


class StageFeed(Protocol):
    """Per-stage oracle: population sizes up front, outcomes on demand."""

    @property
    def num_stages(self) -> int: ...

    def population(self, t: int) -> int:
        """Number of incoming units at stage t (1-based)."""
        ...

    def run_stage(self, t: int, m: int) -> StageOutcome:
        """Treat m of the stage-t units and report the outcomes."""
        ...

    def true_variance(self, t: int) -> "tuple[float, float] | None":
        """Ground-truth outcome variances at stage t, if the feed knows them."""
        ...


@dataclass(frozen=True)
class StageRecord:
    """One executed stage: the decision taken and the costs it incurred."""

    stage: int
    n_units: int
    m: int
    branch: str
    treated_sum: float
    control_sum: float
    stage_cost: float
    cum_cost: float


@dataclass
class ExperimentTrace:
    """Full record of one experiment run against a budget."""

    budget: float
    records: list[StageRecord] = field(default_factory=list)
    stop_reason: str = ""
    final_posterior: "PosteriorState | None" = None
    final_stats: "SufficientStats | None" = None

    @property
    def num_stages(self) -> int:
        return len(self.records)

    @property
    def total_cost(self) -> float:
        """Cumulative true cost over all executed stages (0 if none ran)."""
        return self.records[-1].cum_cost if self.records else 0.0

    @property
    def budget_surplus(self) -> float:
        """Final cumulative cost minus the budget; >= 0 means respected."""
        return self.total_cost - self.budget

    @property
    def ruined(self) -> bool:
        return self.total_cost <= self.budget

    @property
    def ramp_sizes(self) -> list[int]:
        return [r.m for r in self.records]
