"""Conjugate Gaussian beliefs over the control and treatment means.

Outcomes for arm w (0 = control, 1 = treatment) are modelled as independent
draws from ``N(mu_true(w), sigma(w)**2)`` with an independent Gaussian prior
``mu_true(w) ~ N(mu0(w), sigma0(w)**2)`` per arm. Only treated outcomes
under w = 1 and control outcomes under w = 0 are ever observed, so the
treatment-arm posterior is driven by the cumulative treated sum and the
control-arm posterior by the cumulative control sum.

All state here is immutable; updates return new values.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal

__all__ = [
    "InsufficientDataError",
    "GaussianPrior",
    "OutcomeVariance",
    "SufficientStats",
    "PosteriorState",
    "VariancePolicy",
    "zero_stats",
    "init_posterior",
    "update_stats",
    "compute_posterior",
    "estimate_variance",
]

Pair = tuple[float, float]  # indexed by arm: (control, treatment)


class InsufficientDataError(ValueError):
    """An arm has fewer than two observations, so its variance is undefined."""


def _check_pair_positive(name: str, pair: Pair) -> None:
    if len(pair) != 2:
        raise ValueError(f"{name} must have exactly two components, got {pair!r}")
    if not all(math.isfinite(v) and v > 0.0 for v in pair):
        raise ValueError(f"{name} components must be finite and > 0, got {pair!r}")


@dataclass(frozen=True)
class GaussianPrior:
    """Prior mean and variance of the unknown arm means, per arm."""

    mu0: Pair
    sigma0_sq: Pair

    def __post_init__(self) -> None:
        object.__setattr__(self, "mu0", (float(self.mu0[0]), float(self.mu0[1])))
        object.__setattr__(
            self, "sigma0_sq", (float(self.sigma0_sq[0]), float(self.sigma0_sq[1]))
        )
        _check_pair_positive("sigma0_sq", self.sigma0_sq)


@dataclass(frozen=True)
class OutcomeVariance:
    """Per-arm outcome variances, either supplied or estimated from data."""

    sigma_sq: Pair
    mode: Literal["known", "estimated"] = "known"

    def __post_init__(self) -> None:
        object.__setattr__(
            self, "sigma_sq", (float(self.sigma_sq[0]), float(self.sigma_sq[1]))
        )
        _check_pair_positive("sigma_sq", self.sigma_sq)


@dataclass(frozen=True)
class SufficientStats:
    """Cumulative sums, counts and sums of squares of observed outcomes.

    ``treated_sums[w]`` accumulates outcomes of treated units under arm w
    and ``control_sums[w]`` those of control units; only ``treated_sums[1]``
    and ``control_sums[0]`` are observable and ever updated. ``counts`` are
    the cumulative treated and control group sizes ``(M(0), M(1))`` indexed
    by arm. The sum-of-squares accumulators back the variance estimator.
    """

    treated_sums: Pair = (0.0, 0.0)
    control_sums: Pair = (0.0, 0.0)
    counts: tuple[int, int] = (0, 0)
    treated_sumsq: float = 0.0
    control_sumsq: float = 0.0

    @property
    def sum_treated(self) -> float:
        """Cumulative observed treated-group sum (arm 1)."""
        return self.treated_sums[1]

    @property
    def sum_control(self) -> float:
        """Cumulative observed control-group sum (arm 0)."""
        return self.control_sums[0]


@dataclass(frozen=True)
class PosteriorState:
    """Posterior mean and variance of the unknown arm means, per arm."""

    mu_p: Pair
    sigma_p_sq: Pair

    def __post_init__(self) -> None:
        _check_pair_positive("sigma_p_sq", self.sigma_p_sq)


def zero_stats() -> SufficientStats:
    return SufficientStats()


def init_posterior(prior: GaussianPrior) -> PosteriorState:
    """Posterior before any data: a verbatim copy of the prior."""
    return PosteriorState(mu_p=prior.mu0, sigma_p_sq=prior.sigma0_sq)


def update_stats(
    stats: SufficientStats,
    m_t: int,
    N_t: int,
    treated_sum: float,
    control_sum: float,
    treated_sumsq: float = 0.0,
    control_sumsq: float = 0.0,
    *,
    enforce_half_cap: bool = True,
) -> SufficientStats:
    """Fold one stage of observations into the running statistics.

    ``m_t`` treated units out of ``N_t`` contributed ``treated_sum`` (and
    ``treated_sumsq``), the remaining control units ``control_sum`` (and
    ``control_sumsq``). The default cap ``m_t <= floor(N_t / 2)`` matches
    the ramp solver's admissible range; pass ``enforce_half_cap=False``
    for assignment rules that may treat more than half (the Thompson
    baseline does).
    """
    if N_t < 0:
        raise ValueError(f"N_t must be >= 0, got {N_t!r}")
    if not 0 <= m_t <= N_t:
        raise ValueError(f"m_t must be in [0, N_t={N_t}], got {m_t!r}")
    if enforce_half_cap and m_t > N_t // 2:
        raise ValueError(f"m_t={m_t} exceeds the cap floor(N_t/2)={N_t // 2}")
    return SufficientStats(
        treated_sums=(stats.treated_sums[0], stats.treated_sums[1] + float(treated_sum)),
        control_sums=(stats.control_sums[0] + float(control_sum), stats.control_sums[1]),
        counts=(stats.counts[0] + (N_t - m_t), stats.counts[1] + m_t),
        treated_sumsq=stats.treated_sumsq + float(treated_sumsq),
        control_sumsq=stats.control_sumsq + float(control_sumsq),
    )


def compute_posterior(
    prior: GaussianPrior, variance: OutcomeVariance, stats: SufficientStats
) -> PosteriorState:
    """Closed-form conjugate update of both arm means.

    Arm 1 is informed by the observed treated sum with count ``M(1)``, arm 0
    by the observed control sum with count ``M(0)``. Each posterior mean is
    the precision-weighted average of the prior mean and the sample mean,
    and each posterior variance is the reciprocal total precision.
    """
    mu, var = [0.0, 0.0], [0.0, 0.0]
    sums = (stats.control_sums[0], stats.treated_sums[1])
    for w in (0, 1):
        prior_prec = 1.0 / prior.sigma0_sq[w]
        data_prec = stats.counts[w] / variance.sigma_sq[w]
        total = prior_prec + data_prec
        mu[w] = (prior.mu0[w] * prior_prec + sums[w] / variance.sigma_sq[w]) / total
        var[w] = 1.0 / total
    return PosteriorState(mu_p=(mu[0], mu[1]), sigma_p_sq=(var[0], var[1]))


def estimate_variance(
    stats: SufficientStats, fallback: "Pair | None" = None
) -> OutcomeVariance:
    """Sample variance of each arm's own observed outcomes.

    Arm 1 uses the treated accumulators, arm 0 the control accumulators,
    each with denominator ``M(w) - 1``. An arm with fewer than two
    observations has no sample variance: the ``fallback`` value is used for
    that arm when given, otherwise InsufficientDataError is raised (a
    pretrial estimate must then be supplied by the caller).
    """
    out = [0.0, 0.0]
    accum = (
        (stats.counts[0], stats.control_sums[0], stats.control_sumsq),
        (stats.counts[1], stats.treated_sums[1], stats.treated_sumsq),
    )
    for w in (0, 1):
        count, total, sumsq = accum[w]
        if count >= 2:
            # Clamp tiny negative rounding residue from the sumsq formula.
            out[w] = max(sumsq - total * total / count, 0.0) / (count - 1)
        elif fallback is not None:
            out[w] = float(fallback[w])
        else:
            raise InsufficientDataError(
                f"arm {w} has {count} observation(s); need >= 2 or a fallback value"
            )
    if min(out) <= 0.0:
        # Degenerate (constant) data gives a zero estimate; keep strictly
        # positive variances so downstream precisions stay finite.
        out = [max(v, 1e-12) for v in out]
    return OutcomeVariance(sigma_sq=(out[0], out[1]), mode="estimated")


@dataclass(frozen=True)
class VariancePolicy:
    """How the experiment loop obtains per-stage outcome variances.

    ``known`` mode uses ``values`` when given, otherwise whatever the stage
    feed reports as ground truth. ``estimated`` mode applies the sample
    estimator with ``pretrial`` as the per-arm fallback while an arm has
    fewer than two observations (mandatory at the first stage).
    """

    mode: Literal["known", "estimated"] = "known"
    values: "Pair | None" = None
    pretrial: "Pair | None" = None

    def resolve(
        self, stats: SufficientStats, feed_truth: "Pair | None"
    ) -> OutcomeVariance:
        if self.mode == "known":
            values = self.values if self.values is not None else feed_truth
            if values is None:
                raise ValueError(
                    "known-variance mode needs explicit values or a feed that "
                    "reports true variances"
                )
            return OutcomeVariance(sigma_sq=values, mode="known")
        if self.pretrial is None and min(stats.counts) < 2:
            raise InsufficientDataError(
                "estimated-variance mode requires 'pretrial' values until "
                "both arms have at least two observations"
            )
        return estimate_variance(stats, fallback=self.pretrial)
