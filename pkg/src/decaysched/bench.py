"""Random instance families and the greedy-versus-optimal benchmark sweeps.

A benchmark config is a JSON object. Every field is optional::

    {
      "mode": "table",              # table | sweep_jobs | sweep_delta
      "families": ["step", "linear", "exponential", "parabolic", "two-step"],
      "jobs": [2, 5, 8],            # table: J values
      "j_max": 8,                   # sweep_jobs: J = 1..j_max
      "sweep_family": "step",       # sweep_jobs family
      "sweep_jobs": 5,              # sweep_delta: J
      "p_min": 0.1, "p_max": 0.9,
      "p_min_values": [0.01, 0.05, 0.1, 0.2, 0.4, 0.6, 0.8, 0.9],
      "n_processors": 1,
      "horizon": 30,
      "n_instances": 100,
      "seed": 0,
      "value_range": [1.0, 10.0],
      "rate_range": [0.02, 0.3]
    }

Rates are ``p_j = linspace(p_min, p_max, J)``. Reward constants for instance
``i`` of family ``f`` with ``J`` jobs come from a generator keyed by
``(seed, f, J, i)``, so a sweep over ``p_min`` reuses the same rewards.

Each instance is solved exactly on both sides (optimal by backward induction,
greedy by exact policy evaluation), so no Monte Carlo replications are needed.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import math
from dataclasses import asdict, dataclass, fields
from pathlib import Path
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .bounds import delta_ub_appendix, value_ratio
from .dp import StateSpaceError, evaluate_policy_exact, solve_optimal
from .greedy import GreedyPolicy
from .model import Instance, RewardFn, ServiceDist, ValidationError

log = logging.getLogger(__name__)

FAMILIES = ("step", "linear", "exponential", "parabolic", "two-step")
MODES = ("table", "sweep_jobs", "sweep_delta")
TABLE_COLUMNS = ("family", "J", "mean_ratio", "stderr", "delta_ub")
SWEEP_JOBS_COLUMNS = ("J", "mean_ratio", "stderr")
SWEEP_DELTA_COLUMNS = ("p_min", "delta_ub", "mean_ratio", "stderr")


@dataclass(frozen=True)
class BenchConfig:
    mode: str = "table"
    families: Tuple[str, ...] = FAMILIES
    jobs: Tuple[int, ...] = (2, 5, 8)
    j_max: int = 8
    sweep_family: str = "step"
    sweep_jobs: int = 5
    p_min: float = 0.1
    p_max: float = 0.9
    p_min_values: Tuple[float, ...] = (0.01, 0.05, 0.1, 0.2, 0.4, 0.6, 0.8, 0.9)
    n_processors: int = 1
    horizon: int = 30
    n_instances: int = 100
    seed: int = 0
    value_range: Tuple[float, float] = (1.0, 10.0)
    rate_range: Tuple[float, float] = (0.02, 0.3)

    def __post_init__(self):
        for name in ("families", "jobs", "p_min_values", "value_range", "rate_range"):
            object.__setattr__(self, name, tuple(getattr(self, name)))
        if self.mode not in MODES:
            raise ValidationError(f"mode must be one of {MODES}, got {self.mode!r}")
        bad = [f for f in self.families + (self.sweep_family,) if f not in FAMILIES]
        if bad:
            raise ValidationError(f"unknown reward families {bad}; choose from {FAMILIES}")
        if self.n_instances < 1:
            raise ValidationError("n_instances must be >= 1")
        if self.n_processors < 1 or self.horizon < 2:
            raise ValidationError("need n_processors >= 1 and horizon >= 2")
        if min(self.jobs, default=1) < 1 or self.j_max < 1 or self.sweep_jobs < 1:
            raise ValidationError("job counts must be >= 1")
        for p in (self.p_min, self.p_max) + self.p_min_values:
            if not 0 < p <= 1:
                raise ValidationError(f"rate {p} outside (0, 1]")
        if self.p_min > self.p_max or any(p > self.p_max for p in self.p_min_values):
            raise ValidationError("p_min must not exceed p_max")
        lo, hi = self.value_range
        if not 0 < lo <= hi:
            raise ValidationError("value_range must satisfy 0 < low <= high")
        lo, hi = self.rate_range
        if not 0 <= lo <= hi:
            raise ValidationError("rate_range must satisfy 0 <= low <= high")

    @classmethod
    def from_dict(cls, d: dict) -> "BenchConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ValidationError(f"unknown config fields: {sorted(unknown)}")
        return cls(**d)

    @classmethod
    def load(cls, path) -> "BenchConfig":
        try:
            data = json.loads(Path(path).read_text())
        except json.JSONDecodeError as exc:
            raise ValidationError(f"config {path} is not valid JSON: {exc}") from exc
        if not isinstance(data, dict):
            raise ValidationError("config must be a JSON object")
        return cls.from_dict(data)

    def to_dict(self) -> dict:
        return {k: list(v) if isinstance(v, tuple) else v for k, v in asdict(self).items()}


def random_reward(family: str, rng: np.random.Generator, horizon: int,
                  value_range=(1.0, 10.0), rate_range=(0.02, 0.3)) -> RewardFn:
    """One reward curve of ``family`` with uniformly drawn constants."""
    value = float(rng.uniform(*value_range))
    if family == "step":
        return RewardFn.step(value, int(rng.integers(1, horizon + 1)))
    if family == "linear":
        return RewardFn.linear(value, int(rng.integers(1, horizon + 1)))
    if family == "parabolic":
        return RewardFn.parabolic(value, int(rng.integers(1, horizon + 1)))
    if family == "exponential":
        return RewardFn.exponential(value, float(rng.uniform(*rate_range)), horizon)
    if family == "two-step":
        low, high = sorted((value, float(rng.uniform(*value_range))))
        d1, d2 = sorted(int(d) for d in rng.choice(np.arange(1, horizon + 1), size=2, replace=False))
        return RewardFn.two_step(high, d1, low, d2)
    raise ValidationError(f"unknown reward family {family!r}")


def random_instance(family: str, n_jobs: int, index: int, cfg: BenchConfig,
                    p_min: Optional[float] = None) -> Instance:
    """Instance ``index`` of the (family, J) cell; geometric rates evenly spaced on ``[p_min, p_max]``."""
    p_min = cfg.p_min if p_min is None else p_min
    key = [cfg.seed, FAMILIES.index(family), n_jobs, index]
    rng = np.random.default_rng(np.random.SeedSequence(key))
    rewards = [random_reward(family, rng, cfg.horizon, cfg.value_range, cfg.rate_range) for _ in range(n_jobs)]
    services = [ServiceDist.geometric(float(p)) for p in np.linspace(p_min, cfg.p_max, n_jobs)]
    return Instance.build(rewards, services, cfg.n_processors, cfg.horizon)


def instance_ratio(instance: Instance) -> float:
    """Exact ``J*_0 / J^g_0``."""
    opt = solve_optimal(instance).value0
    greedy = evaluate_policy_exact(instance, GreedyPolicy(instance))
    return value_ratio(opt, greedy)


def _cell(family: str, n_jobs: int, cfg: BenchConfig, p_min: Optional[float] = None):
    ratios = []
    for i in range(cfg.n_instances):
        inst = random_instance(family, n_jobs, i, cfg, p_min)
        try:
            ratios.append(instance_ratio(inst))
        except StateSpaceError as exc:
            log.warning("skipping %s J=%d instance %d: %s", family, n_jobs, i, exc)
    if not ratios:
        return math.nan, math.nan
    r = np.array(ratios)
    se = float(np.std(r, ddof=1) / math.sqrt(len(r))) if len(r) > 1 else 0.0
    return float(np.mean(r)), se


def bench_table(cfg: BenchConfig) -> List[tuple]:
    """Rows ``(family, J, mean_ratio, stderr, delta_ub)``."""
    rows = []
    for family in cfg.families:
        for J in cfg.jobs:
            mean, se = _cell(family, J, cfg)
            rows.append((family, J, mean, se, delta_ub_appendix(cfg.p_min, cfg.p_max, J)))
    return rows


def sweep_jobs(cfg: BenchConfig) -> List[tuple]:
    """Rows ``(J, mean_ratio, stderr)`` for ``J = 1..j_max``."""
    return [(J, *_cell(cfg.sweep_family, J, cfg)) for J in range(1, cfg.j_max + 1)]


def sweep_delta(cfg: BenchConfig) -> List[tuple]:
    """Rows ``(p_min, delta_ub, mean_ratio, stderr)``, one per entry of ``p_min_values``."""
    rows = []
    for p in cfg.p_min_values:
        mean, se = _cell(cfg.sweep_family, cfg.sweep_jobs, cfg, p_min=p)
        rows.append((p, delta_ub_appendix(p, cfg.p_max, cfg.sweep_jobs), mean, se))
    return rows


_RUNNERS = {
    "table": (bench_table, TABLE_COLUMNS),
    "sweep_jobs": (sweep_jobs, SWEEP_JOBS_COLUMNS),
    "sweep_delta": (sweep_delta, SWEEP_DELTA_COLUMNS),
}


def _fmt(v) -> str:
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.9g}"
    return str(v)


def rows_to_csv(columns: Sequence[str], rows: Sequence[tuple]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def run_bench(cfg: BenchConfig) -> str:
    """Run the sweep selected by ``cfg.mode`` and return its CSV text."""
    runner, columns = _RUNNERS[cfg.mode]
    return rows_to_csv(columns, runner(cfg))
