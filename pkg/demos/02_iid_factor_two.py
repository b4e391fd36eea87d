"""With identically distributed service times greedy loses at most half.

Both jobs take exactly one slot. Job 0 pays 1 - eps but only at slot 1; job 1
pays 1 at any time. Greedy grabs the larger rate first and forfeits job 0.
"""

# %%
from decaysched import Instance, RewardFn, ServiceDist, evaluate_policy_exact, solve_optimal
from decaysched.bounds import check_bounds
from decaysched.greedy import GreedyPolicy


def pair(eps, horizon=10):
    return Instance.build(
        [RewardFn.step(1 - eps, 1), RewardFn.constant(1.0, horizon)],
        [ServiceDist.deterministic(1)] * 2,
        1, horizon,
    )


# %% the ratio approaches 2 as eps shrinks
for eps in (0.5, 0.25, 0.1, 0.01):
    inst = pair(eps)
    opt = solve_optimal(inst).value0
    g = evaluate_policy_exact(inst, GreedyPolicy(inst))
    print(f"eps={eps:<5} optimal {opt:.3f}  greedy {g:.3f}  ratio {opt / g:.3f}")

# %% the bound report flags the IID case and checks the factor 2
rep = check_bounds(pair(0.1))
print("iid:", rep.iid, " within 2:", rep.within_2, " ratio:", round(rep.ratio, 6))
