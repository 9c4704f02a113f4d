"""Simulator-side robustness checks for a completed trace.

The analytic solver stays conservative beyond the Gaussian model when, at
every stage it treats anyone, (a) the prior does not overestimate the
treatment effect or underestimate its variability at the first stage,
(b) the true mean effect never drops below the history-weighted mean effect
of previously treated units, and (c) the plug-in outcome variances are at
or above the relevant true variances. These checks need the scenario's true
moments, so they are only available in simulation.
"""

from __future__ import annotations

from dataclasses import dataclass

from .posterior import GaussianPrior
from .scenarios import Scenario
from .trace import ExperimentTrace

__all__ = ["StageDiagnostic", "robustness_diagnostics"]

# Relative slack so exact-equality structures count as passing.
_TOL = 1e-9


def _at_least(lhs: float, rhs: float) -> bool:
    return lhs >= rhs - _TOL * max(1.0, abs(rhs))


@dataclass(frozen=True)
class StageDiagnostic:
    """Outcome of the plug-in checks at one stage with a nonzero ramp.

    Fields are None when a check does not apply at that stage (the prior
    checks only bind at the first stage; the history comparisons need at
    least one previously treated unit).
    """

    stage: int
    m: int
    prior_mean_ok: "bool | None"
    prior_variance_ok: "bool | None"
    effect_nondecreasing: "bool | None"
    control_variance_ok: "bool | None"
    effect_variance_ok: bool

    @property
    def passed(self) -> bool:
        checks = (
            self.prior_mean_ok,
            self.prior_variance_ok,
            self.effect_nondecreasing,
            self.control_variance_ok,
            self.effect_variance_ok,
        )
        return all(c is not False for c in checks)


def robustness_diagnostics(
    scenario: Scenario,
    trace: ExperimentTrace,
    prior: GaussianPrior,
    sigma_sq: tuple[float, float],
) -> list[StageDiagnostic]:
    """Evaluate the conservatism conditions stage by stage.

    ``sigma_sq`` is the plug-in variance pair the solver used. Stages with
    m = 0 are skipped; they carry no risk and impose no condition.
    """
    v0, v1 = float(sigma_sq[0]), float(sigma_sq[1])
    out: list[StageDiagnostic] = []
    hist_m = 0  # cumulative treated count before the current stage
    hist_effect = 0.0  # treated-weighted sum of true effects
    hist_var0 = 0.0  # treated-weighted sum of true control variances

    for record in trace.records:
        t, m = record.stage, record.m
        if m == 0:
            continue
        effect_t = scenario.true_effect(t)
        diff_var_t = scenario.effect_variance(t)

        if t == 1:
            prior_mean_ok = _at_least(effect_t, prior.mu0[1] - prior.mu0[0])
            prior_variance_ok = _at_least(
                v0 + v1 + m * (prior.sigma0_sq[0] + prior.sigma0_sq[1]), diff_var_t
            )
        else:
            prior_mean_ok = None
            prior_variance_ok = None

        if hist_m > 0:
            effect_nondecreasing = _at_least(effect_t, hist_effect / hist_m)
            control_variance_ok = _at_least(v0, hist_var0 / hist_m)
        else:
            effect_nondecreasing = None
            control_variance_ok = None

        effect_variance_ok = _at_least(v0 + v1, diff_var_t)

        out.append(
            StageDiagnostic(
                stage=t,
                m=m,
                prior_mean_ok=prior_mean_ok,
                prior_variance_ok=prior_variance_ok,
                effect_nondecreasing=effect_nondecreasing,
                control_variance_ok=control_variance_ok,
                effect_variance_ok=effect_variance_ok,
            )
        )
        hist_m += m
        hist_effect += m * effect_t
        hist_var0 += m * scenario.true_var(0, t)

    return out
