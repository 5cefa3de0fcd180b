"""Online auctions with uniformly random arrival order.

Round k offers the arriving bidder a price computed from the multiset of the
k-1 bids seen so far; the bidder buys iff their bid is at least that price.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations, permutations
from typing import Callable, Iterator, NamedTuple

import numpy as np

from . import benchmarks
from .auctions import Auction, extraction_price
from .core import AuctionOutcome, EstimateWithCI, as_profile, rng_for

__all__ = [
    "EXHAUSTIVE_MAX_N",
    "ArrivalOrder",
    "Decision",
    "MaxPricer",
    "RspePricer",
    "NeverSell",
    "rspe_pricer",
    "online_log",
    "online_sampling_auction",
    "OnlineSampling",
    "expected_online_revenue",
    "DecompositionReport",
    "revenue_decomposition_check",
    "online_vs_benchmark",
]

INF = math.inf
EXHAUSTIVE_MAX_N = 8


@dataclass(frozen=True)
class ArrivalOrder:
    order: tuple
    provenance: str = "explicit"

    def __post_init__(self):
        order = tuple(int(i) for i in self.order)
        if sorted(order) != list(range(len(order))):
            raise ValueError(f"not a permutation of 0..{len(order) - 1}: {order}")
        object.__setattr__(self, "order", order)

    @classmethod
    def uniform(cls, n: int, rng: np.random.Generator, seed=None) -> "ArrivalOrder":
        tag = "uniform-random" if seed is None else f"uniform-random({seed})"
        return cls(tuple(rng.permutation(n).tolist()), tag)


# A pricer maps (round k, observed bids sorted high to low) to a price.
Pricer = Callable[[int, tuple], float]


class MaxPricer:
    """Offer the highest bid observed so far."""

    def __call__(self, k, observed):
        return max(observed) if observed else INF


class NeverSell:
    def __call__(self, k, observed):
        return INF


class RspePricer:
    """Optimal single price of a random half of the observed bids.

    The observed multiset is sorted, then the first ceil(m/2) entries of a
    permutation drawn from stream ``(seed, k)`` form the half. The price is
    therefore a fixed function of (seed, round, multiset).
    """

    def __init__(self, seed: int = 0):
        self.seed = seed
        self._perms = {}

    def __call__(self, k, observed):
        m = len(observed)
        if m == 0:
            return INF
        perm = self._perms.get(k)
        if perm is None or len(perm) != m:
            perm = rng_for(self.seed, k).permutation(m)
            self._perms[k] = perm
        obs = sorted(observed, reverse=True)
        half = [obs[j] for j in perm[: (m + 1) // 2]]
        _, price = extraction_price(half, min_k=1)
        return price

    def __getstate__(self):
        return {"seed": self.seed, "_perms": {}}


def rspe_pricer(seed: int = 0) -> RspePricer:
    return RspePricer(seed)


class Decision(NamedTuple):
    round: int
    bidder: int
    price: float
    served: bool


def online_log(p, order: ArrivalOrder, pricer: Pricer) -> Iterator[Decision]:
    """Yield one irrevocable decision per arrival, in arrival order."""
    p = as_profile(p)
    if len(order.order) != p.n:
        raise ValueError("arrival order length does not match the profile")
    seen = []
    for k, i in enumerate(order.order, start=1):
        price = INF if k == 1 else pricer(k, tuple(sorted(seen, reverse=True)))
        yield Decision(k, i, price, p.bids[i] >= price)
        seen.append(p.bids[i])


def online_sampling_auction(p, order: ArrivalOrder, pricer: Pricer) -> AuctionOutcome:
    p = as_profile(p)
    served = [False] * p.n
    pay = [0.0] * p.n
    for d in online_log(p, order, pricer):
        if d.served:
            served[d.bidder] = True
            pay[d.bidder] = float(d.price)
    return AuctionOutcome.from_lists(served, pay)


class OnlineSampling(Auction):
    """Online sampling auction over an arrival order drawn from the rng."""

    def __init__(self, pricer: Pricer):
        self.pricer = pricer

    def run(self, p, rng):
        return online_sampling_auction(p, ArrivalOrder.uniform(p.n, rng), self.pricer)


def expected_online_revenue(p, pricer: Pricer) -> float:
    """Exact expectation over all n! arrival orders."""
    p = as_profile(p)
    revs = [
        online_sampling_auction(p, ArrivalOrder(o), pricer).revenue for o in permutations(range(p.n))
    ]
    return math.fsum(revs) / len(revs)


def _offline_round_revenue(bids, subset, k, pricer) -> float:
    """Revenue of the offline auction induced by round-k pricing on a
    k-subset: every member faces the price of the other k-1."""
    total = []
    for j in subset:
        rest = tuple(sorted((bids[x] for x in subset if x != j), reverse=True))
        price = INF if k == 1 else pricer(k, rest)
        if bids[j] >= price:
            total.append(float(price))
    return math.fsum(total)


@dataclass(frozen=True)
class DecompositionReport:
    online: float
    decomposed: float
    online_se: float
    decomposed_se: float
    exact: bool

    @property
    def difference(self) -> float:
        return self.online - self.decomposed

    @property
    def difference_se(self) -> float:
        return math.hypot(self.online_se, self.decomposed_se)


def revenue_decomposition_check(p, pricer: Pricer, trials: int = 10_000, seed: int = 0) -> DecompositionReport:
    """Compare E[online revenue] with sum_k (1/k) E[A^k(uniform k-subset)].

    Exhaustive for n <= 6, Monte Carlo otherwise.
    """
    p = as_profile(p)
    n = p.n
    if n < 2:
        raise ValueError("need at least two bidders")
    if n <= 6:
        lhs = expected_online_revenue(p, pricer)
        parts = []
        for k in range(1, n + 1):
            subs = list(combinations(range(n), k))
            parts.append(math.fsum(_offline_round_revenue(p.bids, s, k, pricer) for s in subs) / len(subs) / k)
        return DecompositionReport(lhs, math.fsum(parts), 0.0, 0.0, True)
    lhs_s, rhs_s = np.empty(trials), np.empty(trials)
    for t in range(trials):
        rng = rng_for(seed, 0, t)
        lhs_s[t] = online_sampling_auction(p, ArrivalOrder.uniform(n, rng), pricer).revenue
        rng = rng_for(seed, 1, t)
        acc = 0.0
        for k in range(1, n + 1):
            subset = sorted(rng.choice(n, size=k, replace=False).tolist())
            acc += _offline_round_revenue(p.bids, subset, k, pricer) / k
        rhs_s[t] = acc
    se = lambda x: float(x.std(ddof=1) / math.sqrt(len(x))) if len(x) > 1 else 0.0  # noqa: E731
    return DecompositionReport(float(lhs_s.mean()), float(rhs_s.mean()), se(lhs_s), se(rhs_s), False)


_BENCHMARKS = {"f2": benchmarks.f2, "maxv": benchmarks.maxv}


def online_vs_benchmark(p, pricer: Pricer, benchmark: str = "f2", trials: int = 10_000, seed: int = 0):
    """Mean online revenue over uniform arrival orders and benchmark/mean.

    Enumerates all orders when n <= 8. Returns ``(estimate, benchmark value,
    ratio)``; the ratio is infinite when the auction earns nothing.
    """
    p = as_profile(p)
    if benchmark not in _BENCHMARKS:
        raise ValueError(f"unknown benchmark {benchmark!r}; choose from {sorted(_BENCHMARKS)}")
    if p.n < 2:
        raise ValueError("need at least two bidders")
    if p.n <= EXHAUSTIVE_MAX_N:
        mean = expected_online_revenue(p, pricer)
        est = EstimateWithCI(mean, 0.0, math.factorial(p.n), seed, "exact")
    else:
        revs = np.array(
            [
                online_sampling_auction(p, ArrivalOrder.uniform(p.n, rng_for(seed, t)), pricer).revenue
                for t in range(trials)
            ]
        )
        se = float(revs.std(ddof=1) / math.sqrt(trials)) if trials > 1 else 0.0
        est = EstimateWithCI(float(revs.mean()), se, trials, seed)
    bench = float(_BENCHMARKS[benchmark](p))
    ratio = bench / est.mean if est.mean > 0 else INF
    return est, bench, ratio
