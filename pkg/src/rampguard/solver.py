"""Analytic ramp-size solver.

At each stage the treated-group size m must keep the probability of the
cumulative cost crossing the stage threshold below the stage tolerance.
Under the conjugate Gaussian belief the next-stage cost statistic is
Gaussian with mean and variance that are explicit in m, so the tail
condition

    (b_t - S - mu_tilde(m)) / sigma_tilde(m) <= quantile(Delta_t)

can be inverted in closed form: squaring turns it into a quadratic in m,
the two roots are floored, and each candidate is re-checked against the
original inequality. The largest admissible m wins, capped at half the
incoming population; m = 0 is always admissible and is the fallback.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .normal import normal_quantile
from .posterior import (
    GaussianPrior,
    OutcomeVariance,
    PosteriorState,
    VariancePolicy,
    compute_posterior,
    init_posterior,
    update_stats,
    zero_stats,
)
from .schedules import REL_SLACK, RiskSchedule, ScheduleError, validate_schedule
from .trace import ExperimentTrace, StageFeed, StageRecord

__all__ = [
    "BRANCH_CAP",
    "BRANCH_NO_REAL_ROOT",
    "BRANCH_ROOT",
    "BRANCH_EMPTY",
    "BRANCH_ZERO_TOL",
    "Z_SLACK",
    "PredictiveMoments",
    "QuadraticCoefficients",
    "StageDecision",
    "predictive_moments",
    "quadratic_coefficients",
    "solve_ramp_size",
    "run_rrc_experiment",
]

BRANCH_CAP = "cap_at_half"
BRANCH_NO_REAL_ROOT = "no_real_root"
BRANCH_ROOT = "root_selected"
BRANCH_EMPTY = "empty_valid_set"
BRANCH_ZERO_TOL = "zero_tolerance"

# Absolute slack on the tail-condition comparison; the brute-force oracles
# in the test suite apply the same slack so boundary cases cannot flip.
Z_SLACK = 1e-12

# Threshold below which the quadratic degenerates to a linear equation.
_DEGENERATE_A = 1e-12


@dataclass(frozen=True)
class PredictiveMoments:
    """Mean and variance of the stage cost statistic as functions of m.

    The statistic is the stage's treated-outcome sum minus the cumulative
    counterfactual control sum of all units ever treated; its conditional
    moments depend on the posterior, the outcome variances and the number
    of previously treated units.
    """

    mu_p: tuple[float, float]
    sigma_p_sq: tuple[float, float]
    sigma_sq: tuple[float, float]
    m1_prev: int

    def mu_tilde(self, m):
        return self.mu_p[1] * m - self.mu_p[0] * (m + self.m1_prev)

    def sigma_tilde_sq(self, m):
        mm = m + self.m1_prev
        return (
            m * m * self.sigma_p_sq[1]
            + m * self.sigma_sq[1]
            + mm * mm * self.sigma_p_sq[0]
            + mm * self.sigma_sq[0]
        )


def predictive_moments(
    posterior: PosteriorState, variance: OutcomeVariance, M1_prev: int
) -> PredictiveMoments:
    """Bundle the posterior into the moment functions of the cost statistic."""
    if M1_prev < 0:
        raise ValueError(f"M1_prev must be >= 0, got {M1_prev!r}")
    return PredictiveMoments(
        mu_p=posterior.mu_p,
        sigma_p_sq=posterior.sigma_p_sq,
        sigma_sq=variance.sigma_sq,
        m1_prev=int(M1_prev),
    )


@dataclass(frozen=True)
class QuadraticCoefficients:
    """Coefficients of A m**2 + B m + C = 0, the squared tail condition.

    ``q`` is the standard normal quantile of the stage tolerance. Real roots
    of the quadratic are exactly the points where the tail condition holds
    with equality.
    """

    A: float
    B: float
    C: float
    q: float


def quadratic_coefficients(
    moments: PredictiveMoments, S_T1_prev: float, b_t: float, q: float
) -> QuadraticCoefficients:
    mu0, mu1 = moments.mu_p
    sp0, sp1 = moments.sigma_p_sq
    v0, v1 = moments.sigma_sq
    M = moments.m1_prev
    effect = mu1 - mu0
    slack = b_t - S_T1_prev + mu0 * M
    q2 = q * q
    A = q2 * (sp1 + sp0) - effect * effect
    B = q2 * (v1 + v0 + 2.0 * sp0 * M) + 2.0 * slack * effect
    C = q2 * sp0 * M * M + q2 * v0 * M - slack * slack
    return QuadraticCoefficients(A=A, B=B, C=C, q=q)


def _z_statistic(moments: PredictiveMoments, S_T1_prev: float, b_t: float, m: int) -> float:
    num = b_t - S_T1_prev - moments.mu_tilde(m)
    var = moments.sigma_tilde_sq(m)
    if var <= 0.0:
        # Only reachable at m = 0 with no treatment history: the statistic
        # is exactly zero, so the condition holds iff the threshold is
        # nonnegative relative to it.
        return -math.inf if num < 0.0 else math.inf
    return num / math.sqrt(var)


@dataclass(frozen=True)
class StageDecision:
    """Chosen treated-group size, the branch that produced it, and m/N."""

    m: int
    branch: str
    assignment_probability: float


def solve_ramp_size(
    posterior: PosteriorState,
    variance: OutcomeVariance,
    M1_prev: int,
    S_T1_prev: float,
    b_t: float,
    Delta_t: float,
    N_t: int,
) -> StageDecision:
    """Largest admissible treated-group size for one stage.

    Either the half-population cap already satisfies the tail condition, or
    the condition is squared into a quadratic whose floored roots (and their
    upper neighbours, guarding the floor against float rounding) are
    re-checked directly; the largest survivor in [0, N_t/2] is returned.
    Total function: every failure mode maps to m = 0 with its branch label.
    """
    if N_t < 1:
        raise ValueError(f"N_t must be >= 1, got {N_t!r}")
    if not 0.0 <= Delta_t < 1.0:
        raise ValueError(f"Delta_t must be in [0, 1), got {Delta_t!r}")

    cap = N_t // 2

    def decision(m: int, branch: str) -> StageDecision:
        return StageDecision(m=m, branch=branch, assignment_probability=m / N_t)

    if Delta_t == 0.0:
        # Zero tolerance admits no treated units under positive predictive
        # variance; the quantile would be -inf.
        return decision(0, BRANCH_ZERO_TOL)
    if cap == 0:
        return decision(0, BRANCH_CAP)

    moments = predictive_moments(posterior, variance, M1_prev)
    q = normal_quantile(Delta_t)

    def satisfies(m: int) -> bool:
        return _z_statistic(moments, S_T1_prev, b_t, m) <= q + Z_SLACK

    if satisfies(cap):
        return decision(cap, BRANCH_CAP)

    coef = quadratic_coefficients(moments, S_T1_prev, b_t, q)
    scale = max(abs(coef.B), abs(coef.C), 1.0)
    roots: list[float] = []
    if abs(coef.A) < _DEGENERATE_A * scale:
        # Degenerate quadratic: solve B m + C = 0 when B is meaningful.
        if abs(coef.B) >= _DEGENERATE_A * scale:
            roots.append(-coef.C / coef.B)
        else:
            return decision(0, BRANCH_NO_REAL_ROOT)
    else:
        disc = coef.B * coef.B - 4.0 * coef.A * coef.C
        if disc < 0.0:
            return decision(0, BRANCH_NO_REAL_ROOT)
        sq = math.sqrt(disc)
        roots.append((-coef.B + sq) / (2.0 * coef.A))
        roots.append((-coef.B - sq) / (2.0 * coef.A))

    candidates: set[int] = set()
    for r in roots:
        base = math.floor(r)
        candidates.add(base)
        candidates.add(base + 1)
    valid = [m for m in candidates if 0 <= m <= cap and satisfies(m)]
    if valid:
        return decision(max(valid), BRANCH_ROOT)
    return decision(0, BRANCH_EMPTY)


def run_rrc_experiment(
    prior: GaussianPrior,
    variance_policy: VariancePolicy,
    schedule: RiskSchedule,
    stage_feed: StageFeed,
) -> ExperimentTrace:
    """Run the full adaptive ramp loop against a stage feed.

    Stages execute while the schedule has entries, the feed has populations
    and the running tolerance product still exceeds ``1 - delta``. Each
    stage resolves the outcome variances per the policy, refreshes the
    posterior, solves for m, commits the stage through the feed and folds
    the observed sums back into the statistics.
    """
    report = validate_schedule(schedule)
    if not report.valid:
        raise ScheduleError(f"schedule failed validation: {report}")

    trace = ExperimentTrace(budget=schedule.budget)
    stats = zero_stats()
    variance: OutcomeVariance | None = None
    tol_product = 1.0
    floor = (1.0 - schedule.delta) * (1.0 - REL_SLACK)
    cum_cost = 0.0
    stop_reason = "schedule_exhausted"

    for t in range(1, schedule.num_stages + 1):
        delta_t = schedule.stage_tolerances[t - 1]
        # A stage may run iff consuming its tolerance keeps the prefix
        # product at or above 1 - delta (zero-tolerance stages always fit).
        if tol_product * (1.0 - delta_t) < floor:
            stop_reason = "tolerance_exhausted"
            break
        if t > stage_feed.num_stages:
            stop_reason = "feed_exhausted"
            break

        b_t = schedule.stage_budgets[t - 1]
        n_t = stage_feed.population(t)
        variance = variance_policy.resolve(stats, stage_feed.true_variance(t))
        posterior = compute_posterior(prior, variance, stats)

        decision = solve_ramp_size(
            posterior,
            variance,
            M1_prev=stats.counts[1],
            S_T1_prev=stats.sum_treated,
            b_t=b_t,
            Delta_t=delta_t,
            N_t=n_t,
        )
        outcome = stage_feed.run_stage(t, decision.m)
        cum_cost += outcome.true_cost
        trace.records.append(
            StageRecord(
                stage=t,
                n_units=n_t,
                m=decision.m,
                branch=decision.branch,
                treated_sum=outcome.treated_sum,
                control_sum=outcome.control_sum,
                stage_cost=outcome.true_cost,
                cum_cost=cum_cost,
            )
        )
        stats = update_stats(
            stats,
            decision.m,
            n_t,
            outcome.treated_sum,
            outcome.control_sum,
            outcome.treated_sumsq,
            outcome.control_sumsq,
        )
        tol_product *= 1.0 - delta_t

    trace.stop_reason = stop_reason
    trace.final_stats = stats
    # Posterior reflecting everything observed, under the last variances used.
    if variance is None:
        trace.final_posterior = init_posterior(prior)
    else:
        trace.final_posterior = compute_posterior(prior, variance, stats)
    return trace
