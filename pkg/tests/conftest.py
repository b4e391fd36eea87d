import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from decaysched import Instance, RewardFn, ServiceDist

settings.register_profile(
    "default", max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")


def example1(M=4, eps=0.1, horizon=100):
    rewards = [RewardFn.step(M * M, 1), RewardFn.constant(1 + eps, horizon)]
    services = [ServiceDist.geometric(1.0 / M), ServiceDist.geometric(1.0)]
    return Instance.build(rewards, services, 1, horizon)


def example2(eps=0.25, horizon=10):
    rewards = [RewardFn.step(1 - eps, 1), RewardFn.constant(1.0, horizon)]
    services = [ServiceDist.deterministic(1)] * 2
    return Instance.build(rewards, services, 1, horizon)


@pytest.fixture
def ex1():
    return example1()


@pytest.fixture
def ex2():
    return example2()


# --- hypothesis strategies -------------------------------------------------

values = st.floats(0.5, 10.0, allow_nan=False)


@st.composite
def rewards(draw, horizon):
    kind = draw(st.sampled_from(["step", "linear", "parabolic", "exponential", "two-step", "table"]))
    v = draw(values)
    if kind == "step":
        return RewardFn.step(v, draw(st.integers(1, horizon)))
    if kind == "linear":
        return RewardFn.linear(v, draw(st.integers(1, horizon)))
    if kind == "parabolic":
        return RewardFn.parabolic(v, draw(st.integers(1, horizon)))
    if kind == "exponential":
        return RewardFn.exponential(v, draw(st.floats(0.0, 0.5)), draw(st.integers(1, horizon)))
    if kind == "two-step":
        d1 = draw(st.integers(0, horizon - 1))
        d2 = draw(st.integers(d1 + 1, horizon))
        low = draw(st.floats(0.0, v))
        return RewardFn.two_step(v, d1, low, d2)
    drops = draw(st.lists(st.floats(0.0, 3.0), min_size=1, max_size=horizon + 1))
    return RewardFn.table(np.maximum(v - np.cumsum(drops), 0.0))


@st.composite
def services(draw, kinds=("geometric", "deterministic", "empirical")):
    kind = draw(st.sampled_from(kinds))
    if kind == "geometric":
        return ServiceDist.geometric(draw(st.floats(0.1, 1.0)))
    if kind == "deterministic":
        return ServiceDist.deterministic(draw(st.integers(1, 3)))
    w = draw(st.lists(st.integers(0, 4), min_size=1, max_size=3).filter(lambda w: w[-1] > 0))
    return ServiceDist.empirical(np.array(w, dtype=float) / sum(w))


@st.composite
def instances(draw, max_jobs=3, max_procs=2, max_horizon=10, service_kinds=("geometric", "deterministic", "empirical")):
    J = draw(st.integers(1, max_jobs))
    N = draw(st.integers(1, max_procs))
    T = draw(st.integers(2, max_horizon))
    rs = [draw(rewards(T)) for _ in range(J)]
    ss = [draw(services(service_kinds)) for _ in range(J)]
    return Instance.build(rs, ss, N, T)


# --- acceptance report -----------------------------------------------------

ACCEPTANCE_RESULTS = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in sorted(ACCEPTANCE_RESULTS, key=lambda s: int(s.split()[1].rstrip(":"))):
        terminalreporter.write_line(line)
