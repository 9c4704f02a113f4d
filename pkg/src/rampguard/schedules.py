"""Budget and risk-tolerance sequences for staged releases.

A release plan fixes a total budget ``B < 0`` on the cumulative cost and an
overall ruin tolerance ``delta``. Each stage t carries a threshold ``b_t``
(no smaller than B) and a stage tolerance ``Delta_t``; the plan is valid
when every ``Delta_t`` lies in [0, 1) and the product of ``(1 - Delta_t)``
stays at or above ``1 - delta``. Because every factor is at most one, the
running product is nonincreasing, so a valid plan remains valid when
truncated, and it can be extended stage by stage as long as the product
constraint still holds.

Two stock tolerance constructions are provided: a uniform split that spends
the tolerance evenly over a fixed horizon, and an infinite-horizon sequence
``Delta_t = (gamma/t)**2`` whose infinite product equals ``1 - delta``
exactly when ``gamma`` solves ``sin(pi g)/(pi g) = 1 - delta`` on [0, 1].
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any

__all__ = [
    "REL_SLACK",
    "ScheduleError",
    "RiskSchedule",
    "ScheduleReport",
    "uniform_tolerance",
    "sinc_gamma",
    "sinc_schedule",
    "validate_schedule",
    "schedule_from_config",
]

# Relative slack absorbing float rounding in product comparisons.
REL_SLACK = 1e-12


class ScheduleError(ValueError):
    """Raised for structurally invalid schedules or extensions."""


def uniform_tolerance(delta: float, T: int) -> tuple[float, ...]:
    """Spread an overall tolerance evenly over T stages.

    Returns the constant sequence ``Delta_t = 1 - (1 - delta)**(1/T)``, so
    the product of ``(1 - Delta_t)`` recovers ``1 - delta`` up to rounding.
    """
    if not 0.0 <= delta < 1.0:
        raise ScheduleError(f"delta must be in [0, 1), got {delta!r}")
    if T < 1:
        raise ScheduleError(f"stage count must be >= 1, got {T!r}")
    step = 1.0 - (1.0 - delta) ** (1.0 / T)
    return (step,) * T


def _sinc(g: float) -> float:
    if g == 0.0:
        return 1.0
    x = math.pi * g
    return math.sin(x) / x


def sinc_gamma(delta: float) -> float:
    """Solve sin(pi g)/(pi g) = 1 - delta for g in [0, 1] by bisection.

    The function is strictly decreasing from 1 to 0 on [0, 1], so the root
    is unique; bisection runs to an absolute width of 1e-14.
    """
    if not 0.0 <= delta < 1.0:
        raise ScheduleError(f"delta must be in [0, 1), got {delta!r}")
    if delta == 0.0:
        return 0.0
    target = 1.0 - delta
    lo, hi = 0.0, 1.0
    while hi - lo > 1e-14:
        mid = 0.5 * (lo + hi)
        if _sinc(mid) > target:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def sinc_schedule(delta: float, T_horizon: int) -> tuple[float, ...]:
    """First ``T_horizon`` terms of the infinite schedule (gamma/t)**2.

    Every finite prefix product of ``(1 - Delta_t)`` stays above
    ``1 - delta``; the infinite product converges to it exactly.
    """
    if T_horizon < 1:
        raise ScheduleError(f"horizon must be >= 1, got {T_horizon!r}")
    g = sinc_gamma(delta)
    return tuple((g / t) ** 2 for t in range(1, T_horizon + 1))


@dataclass(frozen=True)
class RiskSchedule:
    """Total budget, overall tolerance and the per-stage sequences.

    Construction checks only the scalar domains and shape; use
    :func:`validate_schedule` for the full per-stage report, since invalid
    sequences must be representable in order to be reported on.
    """

    budget: float
    delta: float
    stage_budgets: tuple[float, ...]
    stage_tolerances: tuple[float, ...]

    def __post_init__(self) -> None:
        if not (math.isfinite(self.budget) and self.budget < 0.0):
            raise ScheduleError(f"budget must be finite and < 0, got {self.budget!r}")
        if not 0.0 <= self.delta < 1.0:
            raise ScheduleError(f"delta must be in [0, 1), got {self.delta!r}")
        object.__setattr__(self, "stage_budgets", tuple(float(b) for b in self.stage_budgets))
        object.__setattr__(
            self, "stage_tolerances", tuple(float(d) for d in self.stage_tolerances)
        )
        if len(self.stage_budgets) != len(self.stage_tolerances):
            raise ScheduleError(
                f"{len(self.stage_budgets)} stage budgets vs "
                f"{len(self.stage_tolerances)} stage tolerances"
            )
        if not all(math.isfinite(b) for b in self.stage_budgets):
            raise ScheduleError("stage budgets must be finite")
        if not all(math.isfinite(d) for d in self.stage_tolerances):
            raise ScheduleError("stage tolerances must be finite")

    @property
    def num_stages(self) -> int:
        return len(self.stage_budgets)

    def tolerance_product(self) -> float:
        prod = 1.0
        for d in self.stage_tolerances:
            prod *= 1.0 - d
        return prod

    def extended(self, b_next: float, delta_next: float) -> "RiskSchedule":
        """Append one stage, accepted only if the product constraint holds.

        The new stage must satisfy ``b_next >= budget`` and keep
        ``prod(1 - Delta_t) >= (1 - delta)`` within the relative slack.
        """
        if b_next < self.budget:
            raise ScheduleError(
                f"stage budget {b_next} is below the total budget {self.budget}"
            )
        if not 0.0 <= delta_next < 1.0:
            raise ScheduleError(f"stage tolerance must be in [0, 1), got {delta_next!r}")
        new_prod = self.tolerance_product() * (1.0 - delta_next)
        if new_prod < (1.0 - self.delta) * (1.0 - REL_SLACK):
            raise ScheduleError(
                "extension rejected: tolerance product "
                f"{new_prod:.12g} would fall below 1 - delta = {1.0 - self.delta:.12g}"
            )
        return RiskSchedule(
            self.budget,
            self.delta,
            self.stage_budgets + (float(b_next),),
            self.stage_tolerances + (float(delta_next),),
        )

    @classmethod
    def uniform(
        cls,
        budget: float,
        delta: float,
        T: int,
        stage_budgets: "tuple[float, ...] | list[float] | None" = None,
    ) -> "RiskSchedule":
        tol = uniform_tolerance(delta, T)
        if stage_budgets is None:
            budgets: tuple[float, ...] = (float(budget),) * T
        else:
            budgets = tuple(float(b) for b in stage_budgets)
        return cls(budget, delta, budgets, tol)

    @classmethod
    def sinc(
        cls,
        budget: float,
        delta: float,
        horizon: int,
        stage_budgets: "tuple[float, ...] | list[float] | None" = None,
    ) -> "RiskSchedule":
        tol = sinc_schedule(delta, horizon)
        if stage_budgets is None:
            budgets: tuple[float, ...] = (float(budget),) * horizon
        else:
            budgets = tuple(float(b) for b in stage_budgets)
        return cls(budget, delta, budgets, tol)

    def to_config(self) -> dict[str, Any]:
        return {
            "budget": self.budget,
            "delta": self.delta,
            "stage_budgets": list(self.stage_budgets),
            "stage_tolerances": list(self.stage_tolerances),
        }


@dataclass(frozen=True)
class ScheduleReport:
    """Per-condition validity report; never raises, only describes."""

    valid: bool
    budget_ok: bool
    budget_violations: tuple[int, ...]  # 1-based stage indices with b_t < B
    tolerance_range_ok: bool
    tolerance_range_violations: tuple[int, ...]  # stages with Delta_t outside [0, 1)
    product: float
    product_ok: bool
    first_prefix_violation: "int | None"  # first stage where the running product dips


def validate_schedule(schedule: RiskSchedule) -> ScheduleReport:
    """Check the per-stage budget floor and the tolerance product.

    The product check is applied to every prefix as a running constraint
    (equivalent to capping each ``Delta_t`` by the remaining headroom) and
    the first violating stage is reported. Comparisons carry a 1e-12
    relative slack to absorb rounding.
    """
    floor_limit = schedule.budget  # b_t >= B, with B < 0
    budget_violations = tuple(
        t for t, b in enumerate(schedule.stage_budgets, start=1) if b < floor_limit
    )
    range_violations = tuple(
        t
        for t, d in enumerate(schedule.stage_tolerances, start=1)
        if not 0.0 <= d < 1.0
    )

    threshold = (1.0 - schedule.delta) * (1.0 - REL_SLACK)
    prod = 1.0
    first_bad: "int | None" = None
    for t, d in enumerate(schedule.stage_tolerances, start=1):
        prod *= 1.0 - d
        if first_bad is None and prod < threshold:
            first_bad = t

    budget_ok = not budget_violations
    range_ok = not range_violations
    product_ok = first_bad is None
    return ScheduleReport(
        valid=budget_ok and range_ok and product_ok,
        budget_ok=budget_ok,
        budget_violations=budget_violations,
        tolerance_range_ok=range_ok,
        tolerance_range_violations=range_violations,
        product=prod,
        product_ok=product_ok,
        first_prefix_violation=first_bad,
    )


def schedule_from_config(config: dict[str, Any]) -> RiskSchedule:
    """Build a schedule from a JSON-style mapping.

    Expected keys: ``budget``, ``delta``, plus ``stage_tolerances`` given
    either as an explicit list or as a generator spec, one of

    - ``{"type": "uniform", "T": 10}``
    - ``{"type": "sinc", "horizon": 10}``
    - ``{"type": "explicit", "values": [...]}``.

    ``stage_budgets`` may be a list, a single number to repeat, or omitted
    entirely (every stage then uses the total budget).
    """
    try:
        budget = float(config["budget"])
        delta = float(config["delta"])
    except KeyError as exc:
        raise ScheduleError(f"schedule config is missing key {exc.args[0]!r}") from None

    tol_spec = config.get("stage_tolerances")
    if tol_spec is None:
        raise ScheduleError("schedule config needs 'stage_tolerances'")
    if isinstance(tol_spec, dict):
        kind = tol_spec.get("type")
        if kind == "uniform":
            tolerances = uniform_tolerance(delta, int(tol_spec["T"]))
        elif kind == "sinc":
            tolerances = sinc_schedule(delta, int(tol_spec["horizon"]))
        elif kind == "explicit":
            tolerances = tuple(float(v) for v in tol_spec["values"])
        else:
            raise ScheduleError(f"unknown tolerance generator type {kind!r}")
    else:
        tolerances = tuple(float(v) for v in tol_spec)

    bud_spec = config.get("stage_budgets")
    if bud_spec is None:
        budgets: tuple[float, ...] = (budget,) * len(tolerances)
    elif isinstance(bud_spec, (int, float)):
        budgets = (float(bud_spec),) * len(tolerances)
    else:
        budgets = tuple(float(v) for v in bud_spec)

    return RiskSchedule(budget, delta, budgets, tolerances)
