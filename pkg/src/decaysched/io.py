"""JSON instance files.

Layout::

    {
      "n_processors": 1,
      "horizon": 100,
      "jobs": [
        {"reward": {"kind": "step", "value": 16.0, "deadline": 1},
         "service": {"kind": "geometric", "p": 0.25}},
        ...
      ]
    }

Reward kinds and their fields: ``step`` (value, deadline), ``two-step``
(high, first_deadline, low, second_deadline), ``linear`` (value, deadline),
``parabolic`` (value, deadline), ``exponential`` (value, rate, horizon),
``table`` (values). Service kinds: ``geometric`` (p), ``deterministic`` (d),
``empirical`` (pmf, with ``pmf[0] = P(sigma = 1)``).
"""

from __future__ import annotations

import json
from pathlib import Path

from .model import Instance, Job, RewardFn, ServiceDist, ValidationError


def instance_to_dict(instance: Instance) -> dict:
    return {
        "n_processors": instance.n_processors,
        "horizon": instance.horizon,
        "jobs": [{"reward": job.reward.to_dict(), "service": job.service.to_dict()} for job in instance.jobs],
    }


def instance_from_dict(d: dict) -> Instance:
    try:
        jobs = []
        for j, entry in enumerate(d["jobs"]):
            r = dict(entry["reward"])
            s = dict(entry["service"])
            jobs.append(Job(j, RewardFn.from_params(r.pop("kind"), **r), ServiceDist.from_params(s.pop("kind"), **s)))
        return Instance(tuple(jobs), int(d["n_processors"]), int(d["horizon"]))
    except (KeyError, TypeError) as exc:
        raise ValidationError(f"malformed instance document: {exc!r}") from exc


def dumps(instance: Instance) -> str:
    return json.dumps(instance_to_dict(instance), indent=2) + "\n"


def loads(text: str) -> Instance:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"instance is not valid JSON: {exc}") from exc
    return instance_from_dict(data)


def load_instance(path) -> Instance:
    return loads(Path(path).read_text())


def save_instance(instance: Instance, path) -> None:
    Path(path).write_text(dumps(instance))
