"""The Thompson-sampling baseline ramps rigidly, ignoring budgets.

Each user is assigned to treatment with probability p^c / (p^c + (1-p)^c),
where p is the posterior probability of a positive effect. Under a
skeptical prior the exponent c fully dictates the opening: small c jumps
in aggressively, large c barely moves, and in neither case does the total
spend respect any budget. The constrained solver sits in between and is
the only one that tracks the budget.
"""

import numpy as np

from rampguard import (
    AnalyticPolicy,
    GaussianPrior,
    RiskSchedule,
    ThompsonPolicy,
    VariancePolicy,
    builtin_scenarios,
    run_replications,
)

REPS = 300
scenario = builtin_scenarios()["npte"]
schedule = RiskSchedule.uniform(-500.0, 0.01, 10)
bandit_prior = GaussianPrior((0.0, -2.0), (0.05, 0.05))

print(f"scenario npte, {REPS} replications, budget reference -500\n")
print(f"{'policy':>22} {'stage-1 med m':>13} {'peak med m':>10} {'ruin':>7}")
for c in (0.25, 1.0, 4.0):
    policy = ThompsonPolicy(c=c, prior=bandit_prior, sigma_sq=(10.0, 10.0))
    s = run_replications(policy, scenario, schedule, REPS, 0, workers=2)
    print(
        f"{'thompson c=' + format(c, 'g'):>22} {s.m_quantiles[1][0]:>13.0f} "
        f"{s.m_quantiles[1].max():>10.0f} {s.ruin_rate:>7.1%}"
    )

constrained = AnalyticPolicy(
    prior=GaussianPrior((0.0, 0.0), (100.0, 100.0)), variance=VariancePolicy()
)
s = run_replications(constrained, scenario, schedule, REPS, 0, workers=2)
print(
    f"{'budget-constrained':>22} {s.m_quantiles[1][0]:>13.0f} "
    f"{s.m_quantiles[1].max():>10.0f} {s.ruin_rate:>7.1%}"
)
