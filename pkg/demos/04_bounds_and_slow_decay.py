"""How Delta and its geometric upper bound behave, and what slower decay does to greedy."""

# %%
import numpy as np

from decaysched import Instance, RewardFn, ServiceDist, evaluate_policy_exact, solve_optimal
from decaysched.bounds import delta_exact, delta_ub_appendix, expected_sigma_max_exact
from decaysched.greedy import GreedyPolicy

# %% E[max sigma] for two geometric(1/2) jobs is 8/3
g = ServiceDist.geometric(0.5)
print("E[sigma_max] =", expected_sigma_max_exact([g, g]))

# %% the upper bound needs only p_min, p_max and J
for p_min in (0.01, 0.05, 0.1, 0.3, 0.9):
    ps = np.linspace(p_min, 0.9, 5)
    inst = Instance.build([RewardFn.step(1, 5)] * 5, [ServiceDist.geometric(p) for p in ps], 1, 5)
    print(f"p_min={p_min:<5} Delta={delta_exact(inst):8.3f}  Delta_UB={delta_ub_appendix(p_min, 0.9, 5):8.3f}")

# %% stretching every reward curve in time closes the greedy gap
base = Instance.build(
    [RewardFn.step(10, 2), RewardFn.step(4, 6), RewardFn.step(6, 4)],
    [ServiceDist.geometric(0.3), ServiceDist.geometric(0.9), ServiceDist.geometric(0.5)],
    1, 8,
)
for L in (1, 2, 4, 8, 16):
    inst = Instance.build([j.reward.stretched(L) for j in base.jobs], [j.service for j in base.jobs],
                          1, L * (base.horizon + 1) - 1)
    opt = solve_optimal(inst).value0
    gr = evaluate_policy_exact(inst, GreedyPolicy(inst))
    print(f"L={L:2d}  optimal {opt:.4f}  greedy {gr:.4f}  relative gap {(opt - gr) / opt:.2e}")
