"""Greedy can be far from optimal when one job's reward collapses quickly.

Two jobs share one processor. Job 0 pays M^2 only if it finishes in the
first slot and takes M slots on average; job 1 always pays 1 + eps and takes
one slot. Greedy ranks by expected reward per unit of service and starts job 1.
"""

# %%
from pathlib import Path

from decaysched import Instance, RewardFn, ServiceDist, State, evaluate_policy_exact, solve_optimal
from decaysched.bounds import check_bounds
from decaysched.greedy import GreedyPolicy
from decaysched.io import load_instance

inst = load_instance(Path(__file__).parent / "data" / "example1.json")
print("reward rates at t=0:", inst.greedy_indices[:, 0])

# %% exact values
table = solve_optimal(inst)
greedy = evaluate_policy_exact(inst, GreedyPolicy(inst))
print(f"optimal {table.value0:.6f}   greedy {greedy:.6f}   ratio {table.value0 / greedy:.4f}")
print("optimal first move starts job", table.action(State.initial(inst)).jobs)

# %% the policy table holds one row per reachable state
print(table.export().splitlines()[:6])

# %% the gap grows with M: ratio (M + 1 + eps) / (1 + eps)
for M in (2, 4, 8, 16):
    ex = Instance.build(
        [RewardFn.step(M * M, 1), RewardFn.constant(1.1, 200)],
        [ServiceDist.geometric(1 / M), ServiceDist.geometric(1.0)],
        1, 200,
    )
    rep = check_bounds(ex)
    print(f"M={M:2d}  ratio {rep.ratio:7.4f}   2 + Delta = {rep.bound_2_plus_delta:7.3f}")
