import csv
import io
import json

import numpy as np
import pytest

from decaysched import Instance, RewardFn, ServiceDist, ValidationError
from decaysched.bench import (
    FAMILIES, SWEEP_DELTA_COLUMNS, SWEEP_JOBS_COLUMNS, TABLE_COLUMNS, BenchConfig, bench_table,
    instance_ratio, random_instance, random_reward, run_bench, sweep_delta, sweep_jobs,
)


def _rows(text):
    return list(csv.reader(io.StringIO(text)))


@pytest.mark.parametrize("family", FAMILIES)
def test_random_rewards_are_valid(family):
    rng = np.random.default_rng(1)
    for _ in range(50):
        w = random_reward(family, rng, 30)
        assert w.horizon <= 30
        assert 1.0 <= w(0) <= 10.0


def test_instances_keyed_by_seed_family_and_index():
    cfg = BenchConfig()
    a = random_instance("step", 3, 4, cfg)
    assert a == random_instance("step", 3, 4, cfg)
    assert a != random_instance("step", 3, 5, cfg)
    assert a != random_instance("step", 3, 4, BenchConfig(seed=1))
    rates = [j.service.p for j in a.jobs]
    assert rates == pytest.approx([0.1, 0.5, 0.9])
    # the p_min sweep changes only the rates
    b = random_instance("step", 3, 4, cfg, p_min=0.5)
    assert [j.reward for j in b.jobs] == [j.reward for j in a.jobs]


def test_config_validation(tmp_path):
    with pytest.raises(ValidationError):
        BenchConfig(mode="plot")
    with pytest.raises(ValidationError):
        BenchConfig(families=("cubic",))
    with pytest.raises(ValidationError):
        BenchConfig(p_min=0.0)
    with pytest.raises(ValidationError):
        BenchConfig(n_instances=0)
    with pytest.raises(ValidationError):
        BenchConfig.from_dict({"n_reps": 5})
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(ValidationError):
        BenchConfig.load(bad)
    good = tmp_path / "good.json"
    good.write_text(json.dumps({"mode": "sweep_jobs", "j_max": 3}))
    cfg = BenchConfig.load(good)
    assert cfg.mode == "sweep_jobs" and cfg.j_max == 3
    assert BenchConfig.from_dict(cfg.to_dict()) == cfg


def test_table_shape_and_ranges():
    cfg = BenchConfig(jobs=(1, 2), n_instances=4)
    text = run_bench(cfg)
    rows = _rows(text)
    assert tuple(rows[0]) == TABLE_COLUMNS
    assert len(rows) == 1 + 2 * len(FAMILIES)
    for fam, J, mean, se, ub in rows[1:]:
        mean = float(mean)
        assert 1 - 1e-9 <= mean <= 2 + float(ub) + 1e-9
        if J == "1":
            assert mean == 1.0 and float(se) == 0.0


def test_sweeps_shape():
    jobs = _rows(run_bench(BenchConfig(mode="sweep_jobs", j_max=3, n_instances=3)))
    assert tuple(jobs[0]) == SWEEP_JOBS_COLUMNS
    assert [r[0] for r in jobs[1:]] == ["1", "2", "3"]
    assert jobs[1][1] == "1"
    delta = _rows(run_bench(BenchConfig(mode="sweep_delta", p_min_values=(0.05, 0.5, 0.9),
                                        sweep_jobs=3, n_instances=3)))
    assert tuple(delta[0]) == SWEEP_DELTA_COLUMNS
    ubs = [float(r[1]) for r in delta[1:]]
    assert ubs == sorted(ubs, reverse=True)
    for p, ub, mean, se in delta[1:]:
        assert float(mean) <= 2 + float(ub)


def test_identical_jobs_ratio_one():
    for J in (2, 3, 4):
        inst = Instance.build([RewardFn.linear(5, 12)] * J, [ServiceDist.geometric(0.4)] * J, 1, 12)
        assert instance_ratio(inst) == pytest.approx(1.0, abs=1e-9)


def test_truncated_exponential_greedy_suboptimal_on_some_seed():
    means = []
    for seed in range(5):
        cfg = BenchConfig(families=("exponential",), jobs=(2,), seed=seed)
        means.append(bench_table(cfg)[0][2])
    assert max(means) > 1.0


def test_csv_bytes_reproducible():
    cfg = BenchConfig(jobs=(2, 3), families=("step", "two-step"), n_instances=3)
    assert run_bench(cfg) == run_bench(cfg)


def test_float_format_nine_significant_digits():
    rows = _rows(run_bench(BenchConfig(mode="sweep_delta", p_min_values=(0.1,), sweep_jobs=2, n_instances=2)))
    ub = rows[1][1]
    assert ub == f"{float(ub):.9g}"
    assert len(ub.replace(".", "").lstrip("0")) <= 9
