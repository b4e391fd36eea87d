"""Greedy-to-optimal ratios on random instance families, at reduced size.

The full-size runs use the JSON configs next to this script::

    decaysched bench demos/configs/table.json --out table.csv
    decaysched bench demos/configs/sweep_jobs.json --out sweep_jobs.csv
    decaysched bench demos/configs/sweep_delta.json --out sweep_delta.csv
"""

# %%
from decaysched.bench import BenchConfig, run_bench

print(run_bench(BenchConfig(mode="table", n_instances=10)))

# %% more jobs, larger gap (on average)
print(run_bench(BenchConfig(mode="sweep_jobs", j_max=6, n_instances=10)))

# %% a wider spread of service rates raises Delta_UB, while the ratio stays modest
print(run_bench(BenchConfig(mode="sweep_delta", n_instances=10)))
