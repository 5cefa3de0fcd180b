"""Domain types shared by every module: bid profiles, environments, outcomes
and the seeded randomness contract."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from itertools import combinations
from typing import Iterable, Sequence, Union

import numpy as np

__all__ = [
    "BidProfile",
    "UnlimitedSupply",
    "MultiUnit",
    "DownwardClosed",
    "Environment",
    "EnvironmentViolation",
    "UnsupportedEnvironment",
    "OutcomeViolation",
    "AuctionOutcome",
    "RandomSource",
    "as_profile",
    "sorted_view",
    "dominates",
    "validate_environment",
    "is_feasible",
    "check_outcome",
    "rng_for",
    "EstimateWithCI",
]

PROB_TOL = 1e-12
_MASK64 = (1 << 64) - 1


class EnvironmentViolation(ValueError):
    """An environment description breaks one of its invariants."""


class UnsupportedEnvironment(ValueError):
    """The operation is not defined for this environment kind."""


class OutcomeViolation(AssertionError):
    """An auction produced an infeasible or non-IR outcome."""


@dataclass(frozen=True)
class BidProfile:
    """Finite list of nonnegative bids.

    Values are stored as given, so ``fractions.Fraction`` bids flow through the
    benchmark functions exactly.
    """

    bids: tuple

    def __post_init__(self):
        bids = tuple(self.bids)
        for i, b in enumerate(bids):
            try:
                fb = float(b)
            except (TypeError, ValueError):
                raise ValueError(f"bid {i} is not a number: {b!r}") from None
            if not math.isfinite(fb) or fb < 0:
                raise ValueError(f"bid {i} must be finite and >= 0, got {b!r}")
        object.__setattr__(self, "bids", bids)

    @property
    def n(self) -> int:
        return len(self.bids)

    def __len__(self):
        return len(self.bids)

    @cached_property
    def order(self) -> tuple:
        """Original indices by rank: highest bid first, ties by lower index."""
        return tuple(sorted(range(self.n), key=lambda i: (-self.bids[i], i)))

    @cached_property
    def ranked(self) -> tuple:
        """Bid values in non-increasing order, b_(1) >= b_(2) >= ..."""
        return tuple(self.bids[i] for i in self.order)

    @cached_property
    def rank_of(self) -> tuple:
        """1-based rank of each original index."""
        ranks = [0] * self.n
        for r, i in enumerate(self.order, start=1):
            ranks[i] = r
        return tuple(ranks)

    def value(self, k: int):
        """k-th largest bid (1-based); 0 when k exceeds n."""
        if k < 1:
            raise ValueError("rank must be >= 1")
        return self.ranked[k - 1] if k <= self.n else 0

    def replace(self, i: int, bid) -> "BidProfile":
        bids = list(self.bids)
        bids[i] = bid
        return BidProfile(tuple(bids))

    def subset(self, indices: Iterable[int]) -> "BidProfile":
        return BidProfile(tuple(self.bids[i] for i in indices))

    def without_top(self, m: int) -> "BidProfile":
        """Profile with the m highest-ranked bidders removed."""
        return BidProfile(self.ranked[m:])


def as_profile(p: Union[BidProfile, Sequence]) -> BidProfile:
    return p if isinstance(p, BidProfile) else BidProfile(tuple(p))


def sorted_view(p) -> list:
    """``(rank, original index, value)`` triples, rank 1 being the highest bid."""
    p = as_profile(p)
    return [(r, i, p.bids[i]) for r, i in enumerate(p.order, start=1)]


def dominates(p, q) -> bool:
    """True iff the i-th largest of ``p`` is at least the i-th largest of ``q``
    for every rank i of ``q``; false whenever ``p`` is shorter."""
    p, q = as_profile(p), as_profile(q)
    if p.n < q.n:
        return False
    return all(a >= b for a, b in zip(p.ranked, q.ranked))


# ---------------------------------------------------------------------------
# Environments


@dataclass(frozen=True)
class UnlimitedSupply:
    kind = "unlimited"


@dataclass(frozen=True)
class MultiUnit:
    units: int
    kind = "multi_unit"

    def __post_init__(self):
        problem = validate_environment(self)
        if problem:
            raise EnvironmentViolation(problem)


@dataclass(frozen=True)
class DownwardClosed:
    """Explicit distribution over feasible winner sets.

    ``sets`` holds ``(frozenset of bidder indices, probability)`` pairs. Every
    subset of a listed set must itself be listed (probability 0 is allowed).
    """

    sets: tuple = field(default_factory=tuple)
    kind = "downward_closed"

    def __post_init__(self):
        sets = tuple((frozenset(s), float(pr)) for s, pr in self.sets)
        object.__setattr__(self, "sets", sets)
        problem = validate_environment(self)
        if problem:
            raise EnvironmentViolation(problem)

    @cached_property
    def family(self) -> frozenset:
        return frozenset(s for s, _ in self.sets)


Environment = Union[UnlimitedSupply, MultiUnit, DownwardClosed]


def _fmt_set(s) -> str:
    return "{" + ",".join(str(i) for i in sorted(s)) + "}"


def validate_environment(e) -> str | None:
    """Return ``None`` when ``e`` is valid, else a description of the violation.

    Accepts an environment object or its instance-file dictionary form
    (``{"type": "multi_unit", "units": 3}`` and so on).
    """
    if isinstance(e, dict):
        kind = e.get("type")
        if kind == "unlimited":
            return None
        if kind == "multi_unit":
            units = e.get("units")
            if isinstance(units, bool) or not isinstance(units, int):
                return f"multi_unit: units must be an integer, got {units!r}"
            return _check_units(units)
        if kind == "downward_closed":
            raw = e.get("feasible_sets")
            if not isinstance(raw, list):
                return "downward_closed: feasible_sets must be an array"
            pairs = []
            for j, entry in enumerate(raw):
                if not isinstance(entry, dict) or "members" not in entry or "prob" not in entry:
                    return f"downward_closed: feasible_sets[{j}] needs 'members' and 'prob'"
                members = entry["members"]
                if not isinstance(members, list) or not all(
                    isinstance(m, int) and not isinstance(m, bool) and m >= 0 for m in members
                ):
                    return f"downward_closed: feasible_sets[{j}].members must be nonnegative integers"
                prob = entry["prob"]
                if isinstance(prob, bool) or not isinstance(prob, (int, float)):
                    return f"downward_closed: feasible_sets[{j}].prob must be a number"
                pairs.append((frozenset(members), float(prob)))
            return _check_family(pairs)
        return f"unknown environment type {kind!r}"
    if isinstance(e, UnlimitedSupply):
        return None
    if isinstance(e, MultiUnit):
        return _check_units(e.units)
    if isinstance(e, DownwardClosed):
        return _check_family(e.sets)
    return f"not an environment: {e!r}"


def _check_units(units) -> str | None:
    if units < 1:
        return f"multi_unit: units must be >= 1, got {units}"
    return None


def _check_family(pairs) -> str | None:
    if not pairs:
        return "downward_closed: no feasible sets listed"
    for _, pr in pairs:
        if not math.isfinite(pr) or pr < 0:
            return f"downward_closed: probability {pr} is not a valid probability"
    total = math.fsum(pr for _, pr in pairs)
    if abs(total - 1.0) > PROB_TOL:
        return f"downward_closed: probability mass sums to {total!r}, expected 1"
    listed = {s for s, _ in pairs}
    if len(listed) != len(pairs):
        return "downward_closed: a feasible set is listed twice"
    for s in sorted(listed, key=lambda s: (len(s), sorted(s))):
        for r in range(len(s)):
            for sub in combinations(sorted(s), r):
                if frozenset(sub) not in listed:
                    return (
                        f"downward_closed: {_fmt_set(sub)} is a subset of "
                        f"{_fmt_set(s)} but is not listed"
                    )
    return None


def is_feasible(env: Environment, winners: Iterable[int]) -> bool:
    winners = frozenset(winners)
    if isinstance(env, UnlimitedSupply):
        return True
    if isinstance(env, MultiUnit):
        return len(winners) <= env.units
    if isinstance(env, DownwardClosed):
        return any(winners <= s for s in env.family)
    raise UnsupportedEnvironment(f"unknown environment {env!r}")


# ---------------------------------------------------------------------------
# Outcomes


@dataclass(frozen=True)
class AuctionOutcome:
    served: tuple
    payments: tuple

    @property
    def revenue(self) -> float:
        return math.fsum(self.payments)

    @property
    def winners(self) -> tuple:
        return tuple(i for i, s in enumerate(self.served) if s)

    @classmethod
    def reject_all(cls, n: int) -> "AuctionOutcome":
        return cls((False,) * n, (0.0,) * n)

    @classmethod
    def from_lists(cls, served, payments) -> "AuctionOutcome":
        return cls(tuple(bool(s) for s in served), tuple(float(x) for x in payments))


def check_outcome(outcome: AuctionOutcome, p, env: Environment | None = None, *, tol=1e-9):
    """Raise ``OutcomeViolation`` unless the outcome is feasible and ex-post IR
    under truthful bids."""
    p = as_profile(p)
    if len(outcome.served) != p.n or len(outcome.payments) != p.n:
        raise OutcomeViolation("outcome length does not match the profile")
    for i, (s, pay) in enumerate(zip(outcome.served, outcome.payments)):
        if pay < 0:
            raise OutcomeViolation(f"bidder {i} has negative payment {pay}")
        if pay > 0 and not s:
            raise OutcomeViolation(f"bidder {i} pays {pay} without being served")
        if s and pay > float(p.bids[i]) * (1 + tol) + tol:
            raise OutcomeViolation(f"bidder {i} pays {pay} above bid {p.bids[i]}")
    if env is not None and not is_feasible(env, outcome.winners):
        raise OutcomeViolation(f"winner set {outcome.winners} infeasible in {env}")


# ---------------------------------------------------------------------------
# Randomness


def rng_for(seed: int, *keys: int) -> np.random.Generator:
    """Generator for the stream addressed by ``(seed, *keys)``.

    Distinct key paths give independent streams (SeedSequence spawn keys).
    """
    return np.random.default_rng(
        np.random.SeedSequence(int(seed) & _MASK64, spawn_key=tuple(int(k) & _MASK64 for k in keys))
    )


@dataclass(frozen=True)
class RandomSource:
    seed: int
    stream: int = 0

    def generator(self) -> np.random.Generator:
        return rng_for(self.seed, self.stream)

    def child(self, key: int) -> np.random.Generator:
        return rng_for(self.seed, self.stream, key)


# ---------------------------------------------------------------------------
# Estimates


@dataclass(frozen=True)
class EstimateWithCI:
    """Monte Carlo (or exhaustive) estimate.

    ``stderr`` is the plain standard error for ``plain-mean``, the robust
    spread of the median for ``median-of-means`` and 0 for ``exact``.
    """

    mean: float
    stderr: float
    trials: int
    seed: int
    estimator: str = "plain-mean"

    def lower(self, z: float = 3.0) -> float:
        return self.mean - z * self.stderr

    def upper(self, z: float = 3.0) -> float:
        return self.mean + z * self.stderr
