"""Thompson-sampling bandit baseline for ramp-schedule comparisons.

Each incoming user is assigned to treatment independently with probability

    p**c / (p**c + (1 - p)**c),

where p is the posterior probability that the treatment mean exceeds the
control mean and c > 0 sharpens (c > 1) or flattens (c < 1) the rule. The
baseline is not budget-aware; traces still account the true costs so its
budget behaviour can be compared against the constrained solvers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .normal import normal_cdf
from .posterior import (
    GaussianPrior,
    OutcomeVariance,
    PosteriorState,
    compute_posterior,
    init_posterior,
    update_stats,
    zero_stats,
)
from .trace import ExperimentTrace, StageFeed, StageRecord

__all__ = ["ThompsonConfig", "thompson_assignment_probability", "run_thompson_experiment"]

BRANCH_THOMPSON = "thompson"


@dataclass(frozen=True)
class ThompsonConfig:
    """Tuning exponent, prior and outcome variances for the baseline.

    ``cap_at_half`` optionally clamps the per-stage treated count at half
    the incoming population; the assignment rule itself has no such cap,
    so it defaults off.
    """

    c: float
    prior: GaussianPrior
    variance: OutcomeVariance
    cap_at_half: bool = False

    def __post_init__(self) -> None:
        if not (math.isfinite(self.c) and self.c > 0.0):
            raise ValueError(f"c must be finite and > 0, got {self.c!r}")


def thompson_assignment_probability(posterior: PosteriorState, c: float) -> float:
    """Per-user treatment probability p**c / (p**c + (1-p)**c).

    p = Phi((mu_p(1) - mu_p(0)) / sqrt(sigma_p(0)^2 + sigma_p(1)^2)) is the
    posterior probability of a positive effect. Evaluated on the logit
    scale so values of p within an ulp of 0 or 1 stay stable.
    """
    if c <= 0.0:
        raise ValueError(f"c must be > 0, got {c!r}")
    z = (posterior.mu_p[1] - posterior.mu_p[0]) / math.sqrt(
        posterior.sigma_p_sq[0] + posterior.sigma_p_sq[1]
    )
    p = normal_cdf(z)
    if p <= 0.0:
        return 0.0
    if p >= 1.0:
        return 1.0
    logit = math.log(p) - math.log1p(-p)
    # expit(c * logit(p)), written to avoid overflow on either side.
    x = c * logit
    if x >= 0.0:
        return 1.0 / (1.0 + math.exp(-x))
    e = math.exp(x)
    return e / (1.0 + e)


def run_thompson_experiment(
    config: ThompsonConfig,
    stage_feed: StageFeed,
    rng: np.random.Generator,
    budget: float = -500.0,
) -> ExperimentTrace:
    """Run the bandit over every stage the feed offers.

    Per stage the treated count is binomial in the incoming population at
    the current assignment probability (each user assigned independently).
    ``budget`` only anchors the surplus accounting in the trace.
    """
    trace = ExperimentTrace(budget=budget)
    stats = zero_stats()
    posterior = init_posterior(config.prior)
    cum_cost = 0.0

    for t in range(1, stage_feed.num_stages + 1):
        n_t = stage_feed.population(t)
        p_t = thompson_assignment_probability(posterior, config.c)
        m_t = int(rng.binomial(n_t, p_t))
        if config.cap_at_half:
            m_t = min(m_t, n_t // 2)
        outcome = stage_feed.run_stage(t, m_t)
        cum_cost += outcome.true_cost
        trace.records.append(
            StageRecord(
                stage=t,
                n_units=n_t,
                m=m_t,
                branch=BRANCH_THOMPSON,
                treated_sum=outcome.treated_sum,
                control_sum=outcome.control_sum,
                stage_cost=outcome.true_cost,
                cum_cost=cum_cost,
            )
        )
        stats = update_stats(
            stats,
            m_t,
            n_t,
            outcome.treated_sum,
            outcome.control_sum,
            outcome.treated_sumsq,
            outcome.control_sumsq,
            enforce_half_cap=False,
        )
        posterior = compute_posterior(config.prior, config.variance, stats)

    trace.stop_reason = "feed_exhausted"
    trace.final_stats = stats
    trace.final_posterior = posterior
    return trace
