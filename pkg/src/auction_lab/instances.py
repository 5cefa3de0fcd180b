"""Instance files: JSON documents holding a bid list and an environment.

    {
      "bids": [10, 5, 4],
      "environment": {"type": "multi_unit", "units": 2}
    }

``environment`` is optional (unlimited supply). Its ``type`` is one of
``unlimited``, ``multi_unit`` (with integer ``units``) or ``downward_closed``
(with ``feasible_sets``: a list of ``{"members": [...], "prob": p}``).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

from .core import BidProfile, DownwardClosed, MultiUnit, UnlimitedSupply, validate_environment

__all__ = ["Instance", "InstanceError", "parse_instance", "load_instance", "dump_instance", "environment_to_dict"]


class InstanceError(ValueError):
    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        where = f"line {line}, column {column}: " if line is not None else ""
        super().__init__(where + message)
        self.line = line
        self.column = column


@dataclass(frozen=True)
class Instance:
    profile: BidProfile
    environment: object


def _reject_constant(name):
    raise ValueError(f"{name} is not allowed")


def parse_instance(text: str) -> Instance:
    try:
        doc = json.loads(text, parse_constant=_reject_constant)
    except json.JSONDecodeError as err:
        raise InstanceError(err.msg, err.lineno, err.colno) from None
    except ValueError as err:
        raise InstanceError(str(err)) from None
    if not isinstance(doc, dict):
        raise InstanceError("top level must be an object")
    bids = doc.get("bids")
    if not isinstance(bids, list):
        raise InstanceError("'bids' must be an array of numbers")
    for i, b in enumerate(bids):
        if isinstance(b, bool) or not isinstance(b, (int, float)):
            raise InstanceError(f"bids[{i}] is not a number: {b!r}")
        if not math.isfinite(b) or b < 0:
            raise InstanceError(f"bids[{i}] must be finite and >= 0, got {b!r}")
    env_doc = doc.get("environment", {"type": "unlimited"})
    if not isinstance(env_doc, dict):
        raise InstanceError("'environment' must be an object")
    problem = validate_environment(env_doc)
    if problem:
        raise InstanceError(problem)
    kind = env_doc["type"]
    if kind == "unlimited":
        env = UnlimitedSupply()
    elif kind == "multi_unit":
        env = MultiUnit(env_doc["units"])
    else:
        env = DownwardClosed(tuple((tuple(s["members"]), s["prob"]) for s in env_doc["feasible_sets"]))
    return Instance(BidProfile(tuple(float(b) for b in bids)), env)


def load_instance(path) -> Instance:
    with open(path, encoding="utf-8") as fh:
        return parse_instance(fh.read())


def environment_to_dict(env) -> dict:
    if isinstance(env, MultiUnit):
        return {"type": "multi_unit", "units": env.units}
    if isinstance(env, DownwardClosed):
        return {
            "type": "downward_closed",
            "feasible_sets": [{"members": sorted(s), "prob": pr} for s, pr in env.sets],
        }
    return {"type": "unlimited"}


def dump_instance(instance: Instance) -> str:
    doc = {
        "bids": [float(b) for b in instance.profile.bids],
        "environment": environment_to_dict(instance.environment),
    }
    return json.dumps(doc, indent=2) + "\n"
