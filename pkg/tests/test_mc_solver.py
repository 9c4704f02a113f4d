import math

import numpy as np
import pytest

from rampguard.mc_solver import (
    CappedEffectCost,
    CostFunction,
    PosteriorQuantities,
    TreatmentEffectCost,
    cost_from_config,
    estimate_posterior_quantities,
    gaussian_exact_sampler,
    run_cantelli_experiment,
    solve_ramp_size_cantelli,
)
from rampguard.posterior import (
    GaussianPrior,
    OutcomeVariance,
    PosteriorState,
    VariancePolicy,
)
from rampguard.scenarios import ScenarioFeed, builtin_scenarios
from rampguard.schedules import RiskSchedule
from rampguard.solver import BRANCH_ZERO_TOL, solve_ramp_size


class ZeroCost(CostFunction):
    def evaluate(self, y1, y0):
        return np.zeros(np.broadcast(np.asarray(y1), np.asarray(y0)).shape)


def quantities(**kw):
    base = dict(
        phi0=1.0, phi1=0.0, phi2=0.0, phi3=1.0, phi4=0.0, phi5=0.0, phi6=0.0,
        phi6_natural=0.0, sample_count=1000, survivor_count=1000,
    )
    base.update(kw)
    return PosteriorQuantities(**base)


def oracle_cantelli_max(q, b_t, delta_t, n_t):
    """Independent grid reference over every m in [0, N/2].

    Shares the solver's predicate definition: the exchangeable-pair
    covariance enters clamped at zero and the history covariance slot uses
    the direct estimate.
    """
    if delta_t == 0.0 or q.phi0 == 0.0:
        return 0
    qt = 1.0 / delta_t - 1.0
    pair = max(q.phi4, 0.0)
    A = q.phi1**2 - qt * pair
    B = 2 * q.phi1 * (q.phi2 - b_t) - qt * q.phi3 + qt * pair - qt * q.phi6_natural
    C = (q.phi2 - b_t) ** 2 - qt * q.phi5
    best = 0
    for m in range(n_t // 2, -1, -1):
        if m * q.phi1 + q.phi2 >= b_t and A * m * m + B * m + C >= 0.0:
            best = m
            break
    return best


class TestCostFunctions:
    def test_treatment_effect(self):
        cost = TreatmentEffectCost()
        assert cost(3.0, 1.0) == 2.0
        np.testing.assert_allclose(
            cost(np.array([1.0, 2.0]), np.array([0.5, 3.0])), [0.5, -1.0]
        )

    def test_capped_effect(self):
        cost = CappedEffectCost(floor=-1.0)
        np.testing.assert_allclose(
            cost(np.array([0.0, 5.0]), np.array([4.0, 1.0])), [-1.0, 4.0]
        )

    def test_registry(self):
        assert isinstance(cost_from_config("treatment_effect"), TreatmentEffectCost)
        capped = cost_from_config({"type": "capped_effect", "floor": -2.5})
        assert capped == CappedEffectCost(floor=-2.5)
        with pytest.raises(KeyError):
            cost_from_config("nope")


class TestSampler:
    def test_point_prior_pins_the_means(self):
        posterior = PosteriorState((2.0, -3.0), (1e-18, 1e-18))
        sampler = gaussian_exact_sampler(posterior, OutcomeVariance((1.0, 1.0)))
        sample = sampler.draw(np.random.default_rng(0))
        assert sample.mean_control == pytest.approx(2.0, abs=1e-8)
        assert sample.mean_treatment == pytest.approx(-3.0, abs=1e-8)

    def test_draw_shapes(self):
        history = [np.ones(5), np.full(3, 2.0)]
        sampler = gaussian_exact_sampler(
            PosteriorState((0.0, 0.0), (1.0, 1.0)), OutcomeVariance((1.0, 1.0)), history
        )
        sample = sampler.draw(np.random.default_rng(1))
        assert [a.shape[0] for a in sample.imputed_controls] == [5, 3]
        assert len(sample.fresh) == 2 and len(sample.fresh[0]) == 2

    def test_counterfactual_sum_moments(self):
        # Mean M * mu_p(0); variance M^2 sp0 + M v0.
        posterior = PosteriorState((0.7, 0.0), (0.09, 0.5))
        variance = OutcomeVariance((2.5, 1.0))
        m1_prev = 40
        history = [np.zeros(m1_prev)]
        sampler = gaussian_exact_sampler(posterior, variance, history)
        rng = np.random.default_rng(7)
        k = 100_000
        r_prev, _, _ = sampler.draw_cost_batch(TreatmentEffectCost(), k, rng)
        sums = 0.0 - r_prev  # observed treated sum is zero here
        want_mean = m1_prev * 0.7
        want_var = m1_prev**2 * 0.09 + m1_prev * 2.5
        se = math.sqrt(want_var / k)
        assert abs(sums.mean() - want_mean) <= 3 * se
        assert np.var(sums) == pytest.approx(want_var, rel=0.05)

    def test_linear_fast_path_matches_per_unit_distribution(self):
        # Same model sampled through the aggregate shortcut and through
        # per-unit imputation (by a nonlinear-but-identity cost wrapper)
        # must agree in mean and variance.
        class EffectNoFlag(CostFunction):
            def evaluate(self, y1, y0):
                return np.asarray(y1) - np.asarray(y0)

        posterior = PosteriorState((0.3, 1.0), (0.2, 0.4))
        variance = OutcomeVariance((3.0, 2.0))
        history = [np.full(30, 1.1), np.full(20, 0.4)]
        k = 60_000
        fast = gaussian_exact_sampler(posterior, variance, history).draw_cost_batch(
            TreatmentEffectCost(), k, np.random.default_rng(3)
        )
        slow = gaussian_exact_sampler(posterior, variance, history).draw_cost_batch(
            EffectNoFlag(), k, np.random.default_rng(4)
        )
        assert fast[0].mean() == pytest.approx(slow[0].mean(), abs=4 * 50 / math.sqrt(k))
        assert np.var(fast[0]) == pytest.approx(np.var(slow[0]), rel=0.05)

    def test_fresh_costs_share_the_mean_draw(self):
        # With large posterior spread the two fresh units' costs correlate.
        posterior = PosteriorState((0.0, 0.0), (50.0, 50.0))
        sampler = gaussian_exact_sampler(posterior, OutcomeVariance((0.1, 0.1)))
        _, h1, h2 = sampler.draw_cost_batch(
            TreatmentEffectCost(), 20_000, np.random.default_rng(5)
        )
        assert np.corrcoef(h1, h2)[0, 1] > 0.95


class TestEstimator:
    def test_zero_cost_never_ruins(self):
        sampler = gaussian_exact_sampler(
            PosteriorState((0.0, 0.0), (1.0, 1.0)), OutcomeVariance((1.0, 1.0)),
            [np.ones(10)],
        )
        q = estimate_posterior_quantities(
            sampler, ZeroCost(), -500.0, 2000, np.random.default_rng(0)
        )
        assert q.phi0 == 1.0
        assert q.survivor_count == 2000
        for name in ("phi1", "phi2", "phi3", "phi4", "phi5", "phi6"):
            assert getattr(q, name) == pytest.approx(0.0, abs=1e-9), name

    def test_degenerate_samples_zero_variances(self):
        posterior = PosteriorState((1.0, 1.0), (1e-18, 1e-18))
        variance = OutcomeVariance((1e-18, 1e-18))
        sampler = gaussian_exact_sampler(posterior, variance, [np.ones(4)])
        q = estimate_posterior_quantities(
            sampler, TreatmentEffectCost(), -500.0, 500, np.random.default_rng(1)
        )
        assert q.phi3 == pytest.approx(0.0, abs=1e-12)
        assert q.phi4 == pytest.approx(0.0, abs=1e-12)
        assert q.phi5 == pytest.approx(0.0, abs=1e-12)

    def test_first_stage_history_terms_are_exactly_zero(self):
        sampler = gaussian_exact_sampler(
            PosteriorState((0.0, 0.0), (100.0, 100.0)), OutcomeVariance((10.0, 10.0))
        )
        q = estimate_posterior_quantities(
            sampler, TreatmentEffectCost(), -500.0, 4000, np.random.default_rng(2)
        )
        assert q.phi0 == 1.0
        assert q.phi2 == 0.0
        assert q.phi5 == 0.0
        # Fresh-unit cost variance: sp0 + sp1 + v0 + v1 = 220.
        assert q.phi3 == pytest.approx(220.0, rel=0.1)
        assert q.phi4 == pytest.approx(200.0, rel=0.1)

    def test_empty_survivor_set_signals_through_phi0(self):
        posterior = PosteriorState((100.0, 0.0), (1e-12, 1e-12))
        variance = OutcomeVariance((1e-6, 1e-6))
        # History cost is hugely negative with certainty: no survivors.
        sampler = gaussian_exact_sampler(posterior, variance, [np.zeros(100)])
        q = estimate_posterior_quantities(
            sampler, TreatmentEffectCost(), -500.0, 100, np.random.default_rng(3)
        )
        assert q.phi0 == 0.0
        assert q.survivor_count == 0
        assert math.isnan(q.phi1)
        d = solve_ramp_size_cantelli(q, -500.0, 0.1, 500)
        assert d.m == 0

    def test_natural_phi6_tracks_history_covariance(self):
        posterior = PosteriorState((0.0, 0.0), (4.0, 4.0))
        variance = OutcomeVariance((1.0, 1.0))
        sampler = gaussian_exact_sampler(posterior, variance, [np.zeros(50)])
        q = estimate_posterior_quantities(
            sampler, TreatmentEffectCost(), -1e9, 200_000, np.random.default_rng(4)
        )
        # Cov(h, R_hist) = Cov(-mu0 noise...) : h = y1f - y0f, R = -sum(imputed)
        # share mu0: Cov = 50 * sp0 = 200.
        assert q.phi6_natural == pytest.approx(200.0, rel=0.1)
        # The printed phi6 reuses the fresh-pair product: Cov(h1, h2) = sp0+sp1.
        assert q.phi6 == pytest.approx(8.0, rel=0.25)


class TestCantelliSolver:
    def test_linear_case_worked_example(self):
        q = quantities(phi1=0.0, phi2=0.0, phi3=1.0, phi4=0.0, phi5=0.0, phi6=0.0)
        # Delta = 0.5 makes the variance multiplier 1; the quadratic
        # degenerates to 100 - m >= 0 and the budget line is always met.
        for n_t, expected in ((500, 100), (150, 75), (1000, 100)):
            d = solve_ramp_size_cantelli(q, -10.0, 0.5, n_t)
            assert d.m == expected == min(100, n_t // 2)

    def test_zero_survivors_and_zero_tolerance(self):
        q = quantities(phi0=0.0)
        assert solve_ramp_size_cantelli(q, -10.0, 0.5, 100).m == 0
        q2 = quantities()
        d = solve_ramp_size_cantelli(q2, -10.0, 0.0, 100)
        assert d.m == 0 and d.branch == BRANCH_ZERO_TOL

    def test_cantelli_bound_halves_at_one_sigma(self):
        # One-sided variance bound: 1 / (1 + lambda^2 / V) at lambda = sqrt(V).
        for v in (0.5, 1.0, 9.0):
            lam = math.sqrt(v)
            assert 1.0 / (1.0 + lam * lam / v) == pytest.approx(0.5)

    def test_grid_oracle_equivalence_randomized(self):
        rng = np.random.default_rng(11)
        for _ in range(600):
            q = quantities(
                phi0=float(rng.uniform(0.05, 1.0)),
                phi1=float(rng.uniform(-5, 5)),
                phi2=float(rng.uniform(-800, 100)),
                phi3=float(rng.uniform(0, 100)),
                phi4=float(rng.uniform(-10, 10)),
                phi5=float(rng.uniform(0, 100)),
                phi6=float(rng.uniform(-50, 50)),
                phi6_natural=float(rng.uniform(-50, 50)),
            )
            b = float(rng.uniform(-900, -1))
            delta = float(rng.uniform(1e-4, 0.99))
            n = int(rng.integers(1, 1001))
            assert solve_ramp_size_cantelli(q, b, delta, n).m == oracle_cantelli_max(
                q, b, delta, n
            )

    def test_large_population_candidate_path(self):
        # N above the grid limit exercises the boundary-candidate scan.
        q = quantities(phi1=0.0, phi2=0.0, phi3=1.0)
        d = solve_ramp_size_cantelli(q, -10.0, 0.5, 40_000)
        assert d.m == oracle_cantelli_max(q, -10.0, 0.5, 40_000) == 100
        q2 = quantities(phi1=1.0, phi2=0.0, phi3=4.0, phi5=2.0)
        d2 = solve_ramp_size_cantelli(q2, -50.0, 0.2, 50_000)
        assert d2.m == oracle_cantelli_max(q2, -50.0, 0.2, 50_000)

    def test_conservatism_versus_analytic(self):
        # Stage-1 comparison on the Gaussian model with the plain effect
        # cost: the variance-bound solver should almost never treat more.
        rng = np.random.default_rng(21)
        wins = 0
        trials = 200
        for _ in range(trials):
            prior_var = float(rng.uniform(0.5, 150))
            noise = float(rng.uniform(0.5, 40))
            posterior = PosteriorState((0.0, 0.0), (prior_var, prior_var))
            variance = OutcomeVariance((noise, noise))
            b = float(rng.uniform(-900, -50))
            delta = float(rng.uniform(0.001, 0.4))
            n = int(rng.integers(10, 1001))
            sampler = gaussian_exact_sampler(posterior, variance)
            q = estimate_posterior_quantities(
                sampler, TreatmentEffectCost(), b, 100_000, rng
            )
            m_mc = solve_ramp_size_cantelli(q, b, delta, n).m
            m_exact = solve_ramp_size(posterior, variance, 0, 0.0, b, delta, n).m
            if m_mc <= m_exact:
                wins += 1
        assert wins >= 0.95 * trials


class TestRunCantelli:
    def test_short_run_shape_and_cap(self):
        scn = builtin_scenarios()["norm"]
        sched = RiskSchedule.uniform(-500.0, 0.05, 10)
        feed = ScenarioFeed(scn, np.random.default_rng(0), keep_treated=True)
        trace = run_cantelli_experiment(
            GaussianPrior((0.0, 0.0), (100.0, 100.0)),
            VariancePolicy(),
            sched,
            feed,
            samples_per_stage=2000,
            sample_rng=np.random.default_rng(1),
        )
        assert trace.num_stages == 10
        assert all(r.m <= r.n_units // 2 for r in trace.records)

    def test_requires_treated_outcome_retention(self):
        scn = builtin_scenarios()["pte"]
        sched = RiskSchedule.uniform(-500.0, 0.05, 4)
        feed = ScenarioFeed(scn, np.random.default_rng(0), keep_treated=False)
        with pytest.raises(ValueError, match="keep_treated"):
            run_cantelli_experiment(
                GaussianPrior((0.0, 0.0), (100.0, 100.0)),
                VariancePolicy(),
                sched,
                feed,
                samples_per_stage=500,
                sample_rng=np.random.default_rng(1),
            )

    def test_more_conservative_than_analytic_on_stage_one(self):
        scn = builtin_scenarios()["pte"]
        sched = RiskSchedule.uniform(-500.0, 0.05, 1)
        feed = ScenarioFeed(scn, np.random.default_rng(2), keep_treated=True)
        trace = run_cantelli_experiment(
            GaussianPrior((0.0, 0.0), (100.0, 100.0)),
            VariancePolicy(),
            sched,
            feed,
            samples_per_stage=50_000,
            sample_rng=np.random.default_rng(3),
        )
        assert 0 <= trace.records[0].m <= 13
