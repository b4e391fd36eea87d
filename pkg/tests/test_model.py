import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import example1, instances, rewards, services
from decaysched import (
    Done, InService, Instance, Job, Matching, RewardFn, ServiceDist, State, ValidationError,
    WAITING, eval_reward, expected_completion_reward, feasible_matchings, greedy_index, residual_dist,
)
from decaysched.model import iter_matchings


# --- rewards ---------------------------------------------------------------

def test_step_reward_plateau_and_drop():
    w = RewardFn.step(5, 3)
    assert eval_reward(w, 2) == 5
    assert eval_reward(w, 3) == 5
    assert eval_reward(w, 4) == 0
    assert eval_reward(w, 10_000) == 0


def test_expiring_pair_job_reward_at_slot_one():
    assert eval_reward(RewardFn.step(16, 1), 1) == 16


def test_negative_slot_rejected():
    with pytest.raises(ValueError):
        eval_reward(RewardFn.step(1, 2), -1)


@pytest.mark.parametrize("vals", [[1, 2], [3, 1, 1.5], [-1, -2], [1, float("nan")]])
def test_table_rejects_bad_curves(vals):
    with pytest.raises(ValidationError):
        RewardFn.table(vals)


def test_family_shapes():
    lin = RewardFn.linear(10, 4)
    assert [lin(t) for t in range(6)] == [10, 7.5, 5, 2.5, 0, 0]
    par = RewardFn.parabolic(8, 2)
    assert [par(t) for t in range(4)] == [8, 6, 0, 0]
    two = RewardFn.two_step(5, 1, 2, 3)
    assert [two(t) for t in range(5)] == [5, 5, 2, 2, 0]
    ex = RewardFn.exponential(2, math.log(2), 3)
    assert [ex(t) for t in range(5)] == pytest.approx([2, 1, 0.5, 0.25, 0])


def test_from_params_round_trip():
    for fn in [RewardFn.step(3, 4), RewardFn.linear(2, 5), RewardFn.two_step(4, 1, 1, 3),
               RewardFn.exponential(1, 0.2, 6), RewardFn.parabolic(2, 2), RewardFn.table([3, 2, 2, 0.5])]:
        d = fn.to_dict()
        again = RewardFn.from_params(d.pop("kind"), **d)
        assert again == fn
        assert np.array_equal(again.values, fn.values)


def test_scaled_and_stretched():
    w = RewardFn.step(3, 2)
    assert [w.scaled(2)(t) for t in range(4)] == [6, 6, 6, 0]
    s = w.stretched(3)
    assert [s(t) for t in range(11)] == [3] * 9 + [0, 0]


@given(st.integers(2, 15).flatmap(rewards))
def test_reward_invariants(w):
    v = np.array([w(t) for t in range(w.horizon + 3)])
    assert np.all(v >= 0)
    assert np.all(np.diff(v) <= 0)
    assert np.all(v[w.horizon + 1:] == 0)


# --- service distributions -------------------------------------------------

def test_geometric_basics():
    g = ServiceDist.geometric(0.25)
    assert g.mean == 4
    assert g.prob(1) == 0.25
    assert g.prob(0) == 0
    assert g.hazard(7) == 0.25
    with pytest.raises(ValidationError):
        ServiceDist.geometric(0)
    with pytest.raises(ValidationError):
        ServiceDist.geometric(1.5)


def test_empirical_validation():
    with pytest.raises(ValidationError):
        ServiceDist.empirical([0.5, 0.4])
    with pytest.raises(ValidationError):
        ServiceDist.empirical([1.2, -0.2])
    e = ServiceDist.empirical([0.5, 0.0, 0.5])
    assert e.mean == 2
    assert e.s_max == 3


@given(services())
def test_service_invariants(d):
    ks = np.arange(0, 60)
    pmf = np.array([d.prob(int(k)) for k in ks])
    assert pmf[0] == 0
    if not d.is_geometric:
        assert math.fsum(pmf) == pytest.approx(1.0, abs=1e-12)
        assert math.fsum(ks * pmf) == pytest.approx(d.mean, rel=1e-12)
    else:
        assert d.mean == pytest.approx(1 / d.p)


def test_residual_dist():
    inst = Instance.build(
        [RewardFn.step(1, 9)] * 3,
        [ServiceDist.geometric(0.3), ServiceDist.deterministic(4), ServiceDist.empirical([0.5, 0, 0.5])],
        3, 9,
    )
    s = State(6, (InService(0, 1), InService(1, 5), InService(2, 5)), (0, 1, 2))
    assert residual_dist(s, inst.jobs[0]) == ServiceDist.geometric(0.3)
    r = residual_dist(s, inst.jobs[1])
    assert r.prob(3) == 1.0
    r = residual_dist(s, inst.jobs[2])
    assert r.prob(2) == pytest.approx(1.0)
    waiting = State(0, (WAITING,) * 3, (None,) * 3)
    assert residual_dist(waiting, inst.jobs[1]) == inst.jobs[1].service
    done = State(1, (Done(0), WAITING, WAITING), (None,) * 3)
    with pytest.raises(ValueError):
        residual_dist(done, inst.jobs[0])


# --- expected reward and index --------------------------------------------

def _job(reward, service):
    return Job(0, reward, service)


def test_expected_completion_reward_examples():
    assert expected_completion_reward(_job(RewardFn.step(16, 1), ServiceDist.geometric(0.25)), 0) == 4
    assert expected_completion_reward(_job(RewardFn.constant(6, 20), ServiceDist.deterministic(2)), 0) == 6
    assert expected_completion_reward(_job(RewardFn.step(1, 2), ServiceDist.geometric(0.5)), 0) == 0.75


def test_greedy_index_examples():
    ex = example1()
    assert greedy_index(ex.jobs[0], 0) == 1
    assert greedy_index(ex.jobs[0], 1) == 0
    for t in (0, 5, 50):
        assert greedy_index(ex.jobs[1], t) == pytest.approx(1.1)
    assert greedy_index(_job(RewardFn.constant(6, 20), ServiceDist.deterministic(2)), 0) == 3


@given(instances(max_jobs=2, max_horizon=8))
def test_completion_reward_matches_direct_sum(inst):
    # independent oracle: explicit sum over sigma up to the horizon
    T = inst.horizon
    for job in inst.jobs:
        for t in range(T + 1):
            direct = math.fsum(job.service.prob(s) * job.reward(t + s) for s in range(1, T - t + 1))
            assert inst.completion_rewards[job.id, t] == pytest.approx(direct, abs=1e-12)


# --- states and matchings -------------------------------------------------

def test_state_cross_consistency():
    with pytest.raises(ValidationError):
        State(2, (InService(0, 1),), (None,))
    with pytest.raises(ValidationError):
        State(2, (Done(0),), (0,))
    with pytest.raises(ValidationError):
        State(1, (InService(0, 1),), (0,))


def test_matching_rejects_duplicates():
    with pytest.raises(ValidationError):
        Matching(frozenset({(0, 0), (1, 0)}))


def _state(K, F, busy=0):
    jobs = [WAITING] * K + [InService(n, 0) for n in range(busy)]
    procs = list(range(K, K + busy)) + [None] * F
    return State(1, tuple(jobs), tuple(procs))


def test_feasible_matching_counts():
    inst = Instance.build([RewardFn.step(1, 5)] * 3, [ServiceDist.geometric(0.5)] * 3, 2, 5)
    ms = feasible_matchings(State.initial(inst), inst)
    assert len(ms) == 3 and all(len(m) == 2 for m in ms)
    inst1 = Instance.build([RewardFn.step(1, 5)] * 2, [ServiceDist.geometric(0.5)] * 2, 1, 5)
    assert len(feasible_matchings(State.initial(inst1), inst1)) == 2
    s = State(3, (Done(0), Done(1)), (None,))
    assert feasible_matchings(s, inst1) == [Matching()]


@given(st.integers(0, 6), st.integers(0, 4), st.integers(0, 2))
def test_matching_count_is_binomial(K, F, busy):
    s = _state(K, F, busy)
    ms = list(iter_matchings(s))
    m = min(K, F)
    assert len(ms) == math.comb(K, m)
    assert all(len(x) == m for x in ms)
    free = set(s.free_processors)
    for x in ms:
        assert all(n in free for _, n in x)
        assert sorted(n for _, n in x) == sorted(free)[:m]


@given(st.integers(1, 5), st.integers(1, 3), st.data())
def test_xyz_round_trip(J, N, data):
    t = data.draw(st.integers(1, 20))
    procs = [None] * N
    jobs = []
    for j in range(J):
        kind = data.draw(st.sampled_from(["w", "d", "s"]))
        free = [n for n in range(N) if procs[n] is None]
        if kind == "s" and free:
            n = data.draw(st.sampled_from(free))
            procs[n] = j
            jobs.append(InService(n, data.draw(st.integers(0, t - 1))))
        elif kind == "d":
            jobs.append(Done(data.draw(st.integers(0, t - 1))))
        else:
            jobs.append(WAITING)
    s = State(t, tuple(jobs), tuple(procs))
    assert State.from_xyz(t, *s.to_xyz()) == s


def test_instance_validation():
    with pytest.raises(ValidationError):
        Instance.build([RewardFn.step(1, 8)], [ServiceDist.geometric(0.5)], 1, 5)
    with pytest.raises(ValidationError):
        Instance.build([], [], 1, 5)
    with pytest.raises(ValidationError):
        Instance.build([RewardFn.step(1, 2)], [ServiceDist.geometric(0.5)], 0, 5)
