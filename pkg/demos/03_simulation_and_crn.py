"""Monte Carlo runs agree with the exact evaluator, and common random numbers
make paired policy comparisons cheap."""

# %%
import io

import numpy as np

from decaysched import Instance, RewardFn, ServiceDist, evaluate_policy_exact, solve_optimal
from decaysched.greedy import GreedyPolicy
from decaysched.simulate import (
    compare_policies_crn, monte_carlo_evaluate, run_policy_on_sample, sample_service_times, write_traces,
)

inst = Instance.build(
    [RewardFn.step(8, 3), RewardFn.linear(6, 12), RewardFn.two_step(5, 4, 2, 10), RewardFn.constant(1, 12)],
    [ServiceDist.geometric(0.3), ServiceDist.geometric(0.7), ServiceDist.empirical([0.2, 0.5, 0.3]),
     ServiceDist.deterministic(2)],
    2, 12,
)
greedy = GreedyPolicy(inst)
table = solve_optimal(inst)

# %% one sampled run
sc = sample_service_times(inst, seed=0, replication=0)
print("sampled service times", sc.sigma)
for rec in run_policy_on_sample(inst, greedy, sc).records:
    print(rec)

# %% Monte Carlo against the exact expectation
exact = evaluate_policy_exact(inst, greedy)
mean, se = monte_carlo_evaluate(inst, greedy, 5000, seed=1)
print(f"exact {exact:.4f}   MC {mean:.4f} +/- {se:.4f}   z = {(mean - exact) / se:+.2f}")

# %% paired comparison: both policies see the same service times
res = compare_policies_crn(inst, table, greedy, 5000, seed=1)
unpaired = np.sqrt(res.totals_a.var(ddof=1) / res.n_reps + res.totals_b.var(ddof=1) / res.n_reps)
print(f"optimal - greedy = {res.mean_diff:.4f} (paired se {res.diff_stderr:.4f}, unpaired se {unpaired:.4f})")
print(f"exact difference   {table.value0 - exact:.4f}")

# %% traces export as CSV
buf = io.StringIO()
write_traces(buf, [run_policy_on_sample(inst, greedy, sample_service_times(inst, 1, r)) for r in range(2)])
print(buf.getvalue())
