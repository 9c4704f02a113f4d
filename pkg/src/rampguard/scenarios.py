"""Outcome-generating scenarios for simulation studies.

Each scenario describes paired potential outcomes (control value, treated
value) for every incoming unit at every stage. Both potential outcomes are
generated so the simulator can account the true per-stage cost, i.e. the
sum of individual treatment effects over the treated group, which is never
observable in a real rollout.

Families:

- ``gaussian_iid``: independent Gaussian arms with stage-constant moments.
- ``gaussian_time_varying``: same, with per-stage means and variances.
- ``gaussian_correlated``: bivariate Gaussian arms with a fixed correlation.
- ``bernoulli_scaled``: each arm is ``scale * Bernoulli(p_arm)``.
- ``student_t_shifted``: each arm is a shifted, scaled Student-t; the scale
  is derived from the requested variance and the degrees of freedom.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any

import numpy as np

from .trace import StageFeed, StageOutcome

__all__ = [
    "FAMILIES",
    "Scenario",
    "ScenarioFeed",
    "generate_stage_outcomes",
    "builtin_scenarios",
    "scenario_from_config",
]

FAMILIES = (
    "gaussian_iid",
    "gaussian_correlated",
    "bernoulli_scaled",
    "student_t_shifted",
    "gaussian_time_varying",
)


def _per_stage(value, T: int, name: str) -> tuple[float, ...]:
    if isinstance(value, (int, float)):
        return (float(value),) * T
    out = tuple(float(v) for v in value)
    if len(out) != T:
        raise ValueError(f"{name} must have length T={T}, got {len(out)}")
    return out


@dataclass(frozen=True)
class Scenario:
    """A named outcome-generating process over T stages.

    ``mean_*`` and ``var_*`` are per-stage tuples (scalars are broadcast at
    construction). ``correlation`` applies only to the correlated Gaussian
    family; ``bernoulli_scale``/``bernoulli_p`` and ``tail_df`` configure
    the scaled-Bernoulli and Student-t families, whose moment tuples are
    derived from those parameters.
    """

    name: str
    family: str
    T: int
    population: tuple[int, ...]
    mean_control: tuple[float, ...]
    mean_treatment: tuple[float, ...]
    var_control: tuple[float, ...]
    var_treatment: tuple[float, ...]
    correlation: "float | None" = None
    bernoulli_scale: "float | None" = None
    bernoulli_p: "tuple[float, float] | None" = None  # (control, treatment)
    tail_df: "float | None" = None

    def __post_init__(self) -> None:
        if self.family not in FAMILIES:
            raise ValueError(f"unknown scenario family {self.family!r}")
        if self.T < 1:
            raise ValueError(f"T must be >= 1, got {self.T!r}")
        if len(self.population) != self.T:
            raise ValueError("population must have one entry per stage")
        if self.family == "gaussian_correlated":
            if self.correlation is None or not -1.0 <= self.correlation <= 1.0:
                raise ValueError("gaussian_correlated needs correlation in [-1, 1]")
        if self.family == "bernoulli_scaled":
            if self.bernoulli_scale is None or self.bernoulli_p is None:
                raise ValueError("bernoulli_scaled needs bernoulli_scale and bernoulli_p")
        if self.family == "student_t_shifted":
            if self.tail_df is None or self.tail_df <= 2.0:
                raise ValueError("student_t_shifted needs tail_df > 2 for finite variance")

    # True per-stage moments (simulator-side knowledge).

    def true_mean(self, w: int, t: int) -> float:
        means = self.mean_treatment if w == 1 else self.mean_control
        return means[t - 1]

    def true_var(self, w: int, t: int) -> float:
        var = self.var_treatment if w == 1 else self.var_control
        return var[t - 1]

    def true_effect(self, t: int) -> float:
        return self.true_mean(1, t) - self.true_mean(0, t)

    def effect_variance(self, t: int) -> float:
        """Variance of the per-unit treatment effect Y(1) - Y(0) at stage t."""
        v0, v1 = self.true_var(0, t), self.true_var(1, t)
        if self.family == "gaussian_correlated":
            rho = self.correlation or 0.0
            return v0 + v1 - 2.0 * rho * math.sqrt(v0 * v1)
        return v0 + v1  # independent arms in every other family


def _gaussian_pair(scn: Scenario, t: int, n: int, rng: np.random.Generator):
    y0 = rng.normal(scn.true_mean(0, t), math.sqrt(scn.true_var(0, t)), n)
    y1 = rng.normal(scn.true_mean(1, t), math.sqrt(scn.true_var(1, t)), n)
    return y0, y1


def _correlated_pair(scn: Scenario, t: int, n: int, rng: np.random.Generator):
    v0, v1 = scn.true_var(0, t), scn.true_var(1, t)
    rho = scn.correlation or 0.0
    cov = np.array([[v0, rho * math.sqrt(v0 * v1)], [rho * math.sqrt(v0 * v1), v1]])
    chol = np.linalg.cholesky(cov)
    z = rng.standard_normal((n, 2)) @ chol.T
    return scn.true_mean(0, t) + z[:, 0], scn.true_mean(1, t) + z[:, 1]


def _bernoulli_pair(scn: Scenario, t: int, n: int, rng: np.random.Generator):
    scale = scn.bernoulli_scale
    p0, p1 = scn.bernoulli_p  # type: ignore[misc]
    y0 = scale * (rng.random(n) < p0).astype(float)
    y1 = scale * (rng.random(n) < p1).astype(float)
    return y0, y1


def _student_pair(scn: Scenario, t: int, n: int, rng: np.random.Generator):
    df = float(scn.tail_df)  # type: ignore[arg-type]
    out = []
    for w in (0, 1):
        # Explicit construction: standard normal over sqrt(chi2/df), then
        # scaled to hit the requested variance df/(df-2) * scale**2.
        scale = math.sqrt(scn.true_var(w, t) * (df - 2.0) / df)
        tvals = rng.standard_normal(n) / np.sqrt(rng.chisquare(df, n) / df)
        out.append(scn.true_mean(w, t) + scale * tvals)
    return out[0], out[1]


_GENERATORS = {
    "gaussian_iid": _gaussian_pair,
    "gaussian_time_varying": _gaussian_pair,
    "gaussian_correlated": _correlated_pair,
    "bernoulli_scaled": _bernoulli_pair,
    "student_t_shifted": _student_pair,
}


def generate_stage_outcomes(
    scenario: Scenario, t: int, rng: np.random.Generator
) -> tuple[np.ndarray, np.ndarray]:
    """Paired potential outcomes (y0, y1) for every unit at stage t."""
    if not 1 <= t <= scenario.T:
        raise ValueError(f"stage {t} outside 1..{scenario.T}")
    n = scenario.population[t - 1]
    return _GENERATORS[scenario.family](scenario, t, n, rng)


class ScenarioFeed:
    """StageFeed backed by a scenario and a replication-local RNG.

    Units are exchangeable within a stage, so the first m generated units
    form the treated group. Set ``keep_treated`` to retain the individual
    observed treated outcomes (the Monte-Carlo solver needs them).
    """

    def __init__(
        self, scenario: Scenario, rng: np.random.Generator, keep_treated: bool = False
    ) -> None:
        self.scenario = scenario
        self.rng = rng
        self.keep_treated = keep_treated

    @property
    def num_stages(self) -> int:
        return self.scenario.T

    def population(self, t: int) -> int:
        return self.scenario.population[t - 1]

    def true_variance(self, t: int) -> tuple[float, float]:
        return (self.scenario.true_var(0, t), self.scenario.true_var(1, t))

    def run_stage(self, t: int, m: int) -> StageOutcome:
        y0, y1 = generate_stage_outcomes(self.scenario, t, self.rng)
        n = y0.shape[0]
        if not 0 <= m <= n:
            raise ValueError(f"m={m} outside [0, N_t={n}] at stage {t}")
        treated = y1[:m]
        control = y0[m:]
        return StageOutcome(
            treated_sum=float(treated.sum()),
            treated_sumsq=float((treated * treated).sum()),
            control_sum=float(control.sum()),
            control_sumsq=float((control * control).sum()),
            true_cost=float((y1[:m] - y0[:m]).sum()),
            treated_outcomes=treated.copy() if self.keep_treated else None,
        )


def _bernoulli_scenario(
    name: str, T: int, population, scale: float, p0: float, p1: float
) -> Scenario:
    pop = _per_stage(population, T, "population")
    return Scenario(
        name=name,
        family="bernoulli_scaled",
        T=T,
        population=tuple(int(n) for n in pop),
        mean_control=(scale * p0,) * T,
        mean_treatment=(scale * p1,) * T,
        var_control=(scale * scale * p0 * (1.0 - p0),) * T,
        var_treatment=(scale * scale * p1 * (1.0 - p1),) * T,
        bernoulli_scale=scale,
        bernoulli_p=(p0, p1),
    )


def builtin_scenarios() -> dict[str, Scenario]:
    """Registry of the stock simulation scenarios, keyed by name.

    The ten-stage scenarios all use 500 incoming units per stage. ``pte``,
    ``nte`` and ``npte`` are the ramp-study processes (positive, negative
    and negative-to-positive treatment effect; ``npte`` ramps the treatment
    mean from -2 up to a cap of 2). The budget-spend quartet ``norm``,
    ``corr``, ``bern`` and ``fat`` share a unit-magnitude harmful treatment
    effect and outcome variance 10 per arm, differing in distribution
    shape: plain Gaussian, correlated arms (rho 0.8), scaled Bernoulli and
    shifted Student-t. ``dec`` degrades the treatment mean linearly without
    bound. ``linkedin`` replays six stages of group-level moments from a
    real phased release, with populations scaled down for desk-size
    simulation.
    """
    T, N = 10, 500
    ten = (N,) * T

    def gaussian(name, mu0, mu1, family="gaussian_iid", corr=None):
        return Scenario(
            name=name,
            family=family,
            T=T,
            population=ten,
            mean_control=_per_stage(mu0, T, "mean_control"),
            mean_treatment=_per_stage(mu1, T, "mean_treatment"),
            var_control=(10.0,) * T,
            var_treatment=(10.0,) * T,
            correlation=corr,
        )

    npte_means = tuple(min(-2.0 + 0.5 * (t - 1), 2.0) for t in range(1, T + 1))
    dec_means = tuple(-float(t - 1) for t in range(1, T + 1))

    linkedin = Scenario(
        name="linkedin",
        family="gaussian_time_varying",
        T=6,
        population=(10756, 10460, 10598, 7580, 10550, 10688),
        mean_control=(0.3648, 0.3780, 0.3752, 0.2317, 0.4009, 0.3930),
        mean_treatment=(0.3659, 0.3788, 0.3754, 0.2317, 0.4010, 0.3941),
        var_control=(2.0993, 2.2769, 2.0909, 1.1165, 2.2705, 2.3982),
        var_treatment=(2.0923, 2.2248, 2.0135, 1.0526, 2.2476, 2.4430),
    )

    fat = Scenario(
        name="fat",
        family="student_t_shifted",
        T=T,
        population=ten,
        mean_control=(1.0,) * T,
        mean_treatment=(0.0,) * T,
        var_control=(10.0,) * T,
        var_treatment=(10.0,) * T,
        tail_df=4.0,
    )

    return {
        "pte": gaussian("pte", 0.0, 1.0),
        "nte": gaussian("nte", 1.0, 0.0),
        "npte": gaussian("npte", 0.0, npte_means, family="gaussian_time_varying"),
        "norm": gaussian("norm", 0.0, -1.0),
        "corr": gaussian("corr", 0.0, -1.0, family="gaussian_correlated", corr=0.8),
        "bern": _bernoulli_scenario("bern", T, N, 6.4, 0.5786, 0.4224),
        "fat": fat,
        "dec": gaussian("dec", 0.0, dec_means, family="gaussian_time_varying"),
        "linkedin": linkedin,
    }


def scenario_from_config(spec: "str | dict[str, Any]") -> Scenario:
    """Resolve a scenario by registry name or build one from a mapping.

    Inline definitions use the Scenario field names; ``population`` and the
    moment fields accept scalars, which broadcast over ``T``. The
    Bernoulli family takes ``bernoulli_scale``/``bernoulli_p`` instead of
    moments; the Student-t family derives its scale from ``var_*``.
    """
    if isinstance(spec, str):
        registry = builtin_scenarios()
        if spec not in registry:
            raise KeyError(f"unknown scenario {spec!r}; known: {sorted(registry)}")
        return registry[spec]

    d = dict(spec)
    name = d.get("name", "custom")
    family = d["family"]
    T = int(d["T"])
    pop = _per_stage(d["population"], T, "population")
    population = tuple(int(n) for n in pop)
    if family == "bernoulli_scaled":
        scale = float(d["bernoulli_scale"])
        p0, p1 = (float(p) for p in d["bernoulli_p"])
        return _bernoulli_scenario(name, T, population, scale, p0, p1)
    return Scenario(
        name=name,
        family=family,
        T=T,
        population=population,
        mean_control=_per_stage(d["mean_control"], T, "mean_control"),
        mean_treatment=_per_stage(d["mean_treatment"], T, "mean_treatment"),
        var_control=_per_stage(d["var_control"], T, "var_control"),
        var_treatment=_per_stage(d["var_treatment"], T, "var_treatment"),
        correlation=d.get("correlation"),
        tail_df=d.get("tail_df"),
    )
