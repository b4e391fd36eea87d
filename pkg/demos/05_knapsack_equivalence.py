"""Deterministic jobs with a shared deadline are a multiple-knapsack problem.

Items become jobs whose service time is the item size; every job pays its
value if it finishes by the capacity. Exhaustive search on both sides agrees.
"""

# %%
import numpy as np

from decaysched import solve_optimal
from decaysched.oracle import KnapsackInstance, brute_force_deterministic, knapsack_as_schedule, knapsack_bruteforce

kp = KnapsackInstance(values=(6, 10, 12), sizes=(1, 2, 3), n_knapsacks=1, capacity=5)
print("knapsack:", knapsack_bruteforce(kp), " schedule:", solve_optimal(knapsack_as_schedule(kp)).value0)

# %% random instances, two knapsacks
rng = np.random.default_rng(0)
for _ in range(5):
    J = int(rng.integers(3, 7))
    kp = KnapsackInstance(tuple(rng.integers(1, 20, J).tolist()), tuple(rng.integers(1, 5, J).tolist()),
                          2, int(rng.integers(3, 9)))
    inst = knapsack_as_schedule(kp)
    print(kp.values, kp.sizes, "cap", kp.capacity, "->",
          knapsack_bruteforce(kp), solve_optimal(inst).value0, brute_force_deterministic(inst))
