"""Offline truthful auctions.

Every deterministic building block is written as "offer each bidder a price
that does not depend on their own bid" or as a monotone allocation with an
explicit threshold payment, so fixing the random coins always leaves a
truthful auction. Coins are drawn from the supplied generator in a
bid-independent order (per bidder index), which is what makes "fixed seed"
mean "fixed coins" in the truthfulness audit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .core import (
    AuctionOutcome,
    BidProfile,
    DownwardClosed,
    MultiUnit,
    UnlimitedSupply,
    UnsupportedEnvironment,
    as_profile,
    check_outcome,
)

__all__ = [
    "DEFAULT_SIGMA",
    "DC_BSPE_WEIGHT",
    "DC_VICKREY_WEIGHT",
    "Auction",
    "Vickrey",
    "FixedPrice",
    "PerDigital",
    "PerMultiUnit",
    "Rspe",
    "Mixture",
    "LimitedFromUnlimited",
    "SigmaBspe",
    "Dc651",
    "Theorem3",
    "PayYourBid",
    "RejectAll",
    "vickrey",
    "fixed_price_sale",
    "per_digital",
    "per_multiunit",
    "rspe",
    "mixture",
    "limited_from_unlimited",
    "theorem3_auction",
    "bspe_partition",
    "partition_from_coins",
    "sigma_bspe",
    "dc_auction_651",
    "extraction_price",
]

INF = math.inf
# argmax of sigma - (sigma/(1-sigma))**3, the positive root of s^2 - (2+sqrt3)s + 1
DEFAULT_SIGMA = 0.290573
DC_BSPE_WEIGHT = 4.51
DC_VICKREY_WEIGHT = 2.0

# Outcomes are verified for feasibility and IR unless python runs with -O.
CHECK_OUTCOMES = __debug__


def _reject(n):
    return AuctionOutcome.reject_all(n)


def _kth_largest(values, k):
    """k-th largest of ``values`` (1-based); 0 when there are fewer than k."""
    if k <= 0:
        return INF
    if len(values) < k:
        return 0.0
    return sorted(values, reverse=True)[k - 1]


# ---------------------------------------------------------------------------
# Deterministic building blocks


def vickrey(p, units: int) -> AuctionOutcome:
    """Serve the ``units`` highest bidders at the (units+1)-th highest bid."""
    if units < 1:
        raise ValueError("vickrey needs units >= 1")
    p = as_profile(p)
    price = float(p.value(units + 1))
    served = [False] * p.n
    pay = [0.0] * p.n
    for i in p.order[:units]:
        served[i] = True
        pay[i] = price
    return AuctionOutcome.from_lists(served, pay)


def fixed_price_sale(p, price, cap: int) -> AuctionOutcome:
    """Uniform-price sale of ``cap`` units with reserve ``price``.

    The highest bidders with bid >= price win, at most ``cap`` of them; each
    pays max(price, (cap+1)-th highest bid), which is their threshold.
    """
    if cap < 1:
        raise ValueError("fixed_price_sale needs cap >= 1")
    p = as_profile(p)
    served = [False] * p.n
    pay = [0.0] * p.n
    qualified = [i for i in p.order if p.bids[i] >= price]
    charge = float(max(price, p.value(cap + 1))) if len(qualified) > cap else float(price)
    for i in qualified[:cap]:
        served[i] = True
        pay[i] = charge
    return AuctionOutcome.from_lists(served, pay)


def extraction_price(target, cap=None, min_k: int = 2):
    """Price at which the target profile's best fixed-price sale happens.

    Maximises k * t_(k) over k in [min_k, min(cap, len)]; ties go to the larger
    k. Returns ``(k, price)`` or ``None`` if the range is empty.
    """
    t = sorted(target, reverse=True)
    top = len(t) if cap is None else min(cap, len(t))
    if top < min_k:
        return None
    best_k, best = None, None
    for k in range(min_k, top + 1):
        r = k * t[k - 1]
        if best is None or r >= best:
            best_k, best = k, r
    return best_k, t[best_k - 1]


def _gate_with_self_raised(market_bids, target) -> list:
    """For each market bidder, does the market dominate ``target`` rank-wise
    once that bidder's own bid is replaced by +inf?"""
    m = len(market_bids)
    t = sorted(target, reverse=True)
    T = len(t)
    if T > m:
        return [False] * m
    order = sorted(range(m), key=lambda j: (-market_bids[j], j))
    ms = [market_bids[j] for j in order]
    # shifted[s]: rank s+1 is filled by the old rank-s value (0-based s >= 1)
    shifted_ok = [True] * (T + 1)
    for s in range(1, T):
        shifted_ok[s + 1] = shifted_ok[s] and ms[s - 1] >= t[s]
    # plain_ok[r]: ranks r+1..T (1-based) keep their own values
    plain_ok = [True] * (m + 2)
    for r in range(T - 1, -1, -1):
        plain_ok[r] = plain_ok[r + 1] and ms[r] >= t[r]
    out = [False] * m
    for rank0, j in enumerate(order):
        r = rank0 + 1
        out[j] = shifted_ok[min(r, T)] and plain_ok[r]
    return out


def _bid_independent_extraction(bids, market, target, *, cap=None, min_k=2):
    """Profit extraction of ``target`` from the bidders in ``market``.

    Returns per-market-bidder offered price (INF when the bidder's gate fails
    or the target is too small) keyed by bidder index.
    """
    found = extraction_price(target, cap, min_k)
    if found is None:
        return {i: INF for i in market}
    _, price = found
    gates = _gate_with_self_raised([bids[i] for i in market], target)
    return {i: (price if ok else INF) for i, ok in zip(market, gates)}


def per_digital(p, target) -> AuctionOutcome:
    """Profit extraction for digital goods.

    Extracts the target's two-winner fixed-price revenue at price t_(k*).
    Each bidder is gated on dominance computed with their own bid raised to
    +inf, then served iff their bid clears the price; the price never depends
    on the bidder's own bid.
    """
    p = as_profile(p)
    target = list(as_profile(target).bids)
    offers = _bid_independent_extraction(p.bids, range(p.n), target)
    served = [False] * p.n
    pay = [0.0] * p.n
    for i, price in offers.items():
        if price < INF and p.bids[i] >= price:
            served[i] = True
            pay[i] = float(price)
    return AuctionOutcome.from_lists(served, pay)


def per_multiunit(p, target, units: int) -> AuctionOutcome:
    """Capacity-respecting profit extraction: gated reserve-price sale of
    ``units`` items at the target's best price with between 2 and ``units``
    winners. Guarantees f2l(target, units) when ``p`` dominates ``target``."""
    if units < 2:
        raise ValueError("per_multiunit needs units >= 2")
    p = as_profile(p)
    target = list(as_profile(target).bids)
    found = extraction_price(target, units)
    if found is None:
        return _reject(p.n)
    _, price = found
    gates = _gate_with_self_raised(list(p.bids), target)
    sale = fixed_price_sale(p, price, units)
    served = [s and g for s, g in zip(sale.served, gates)]
    pay = [x if s else 0.0 for x, s in zip(sale.payments, served)]
    return AuctionOutcome.from_lists(served, pay)


def rspe(p, rng: np.random.Generator) -> AuctionOutcome:
    """Random-sampling profit extraction.

    A uniformly random balanced split of bidder indices into halves A and B;
    each half is offered the extraction price of the other half's bids. A
    singleton opposite half is extracted at its single bid.
    """
    p = as_profile(p)
    perm = rng.permutation(p.n)
    half = p.n // 2
    a, b = sorted(perm[:half].tolist()), sorted(perm[half:].tolist())
    served = [False] * p.n
    pay = [0.0] * p.n
    for market, other in ((a, b), (b, a)):
        target = [p.bids[j] for j in other]
        min_k = 1 if len(target) == 1 else 2
        offers = _bid_independent_extraction(p.bids, market, target, min_k=min_k)
        for i, price in offers.items():
            if price < INF and p.bids[i] >= price:
                served[i] = True
                pay[i] = float(price)
    return AuctionOutcome.from_lists(served, pay)


# ---------------------------------------------------------------------------
# Biased sampling


def partition_from_coins(p, sigma: float, coins) -> tuple:
    """Split into (market, sample) index tuples.

    The two highest-ranked bidders go to the market; every other bidder i is
    in the sample iff ``coins[i] < sigma``.
    """
    p = as_profile(p)
    top = set(p.order[:2])
    market = tuple(i for i in range(p.n) if i in top or coins[i] >= sigma)
    sample = tuple(i for i in range(p.n) if i not in top and coins[i] < sigma)
    return market, sample


def bspe_partition(p, sigma: float, rng: np.random.Generator) -> tuple:
    if not 0 < sigma < 0.5:
        raise ValueError("sigma must lie in (0, 1/2)")
    p = as_profile(p)
    return partition_from_coins(p, sigma, rng.random(p.n))


def _top_two_of_others(p: BidProfile, i: int):
    """Indices of the highest and second-highest bidders other than i."""
    rest = [j for j in p.order[:3] if j != i]
    return (rest + [None, None])[:2]


def _enters_top_two(p: BidProfile, i: int, second_other) -> bool:
    if second_other is None:
        return True
    b, o = p.bids[i], p.bids[second_other]
    return b > o or (b == o and i < second_other)


def _bspe_views(p: BidProfile, sigma: float, coins):
    """Per-bidder target and market.

    A bidder whose coin says "market" sees the partition computed as if they
    were outside the top two; a bidder whose coin says "sample" sees it as if
    they were in the top two (the only way they can be in the market). Either
    way the view is a function of the other bids and the coins only. Views
    are shared: at most a handful of distinct ones exist per coin draw.
    """
    in_sample_coin = [c < sigma for c in coins]
    sampled = [j for j in range(p.n) if in_sample_coin[j]]
    top3 = p.order[:3]
    shared = {}
    views = []
    for i in range(p.n):
        if i in top3:
            o1, o2 = _top_two_of_others(p, i)
        else:
            o1, o2 = top3[0], top3[1]
            if in_sample_coin[i]:
                views.append(None)  # ranks below o2, stays in the sample
                continue
        if in_sample_coin[i] and not _enters_top_two(p, i, o2):
            views.append(None)
            continue
        excluded = (o1, i) if in_sample_coin[i] else (o1, o2)
        view = shared.get(excluded)
        if view is None:
            target = [j for j in sampled if j not in excluded]
            tset = set(target)
            view = (target, [j for j in range(p.n) if j not in tset])
            shared[excluded] = view
        member_threshold = 0.0
        if in_sample_coin[i] and o2 is not None:
            member_threshold = float(p.bids[o2])
        views.append((view[0], view[1], o2, member_threshold))
    return views, in_sample_coin


def sigma_bspe(p, sigma: float, env, rng: np.random.Generator) -> AuctionOutcome:
    """Biased random-sampling profit extraction.

    The two highest bids always sit in the market, every other bidder joins
    the sample with probability ``sigma``; the market faces profit extraction
    of the sample's bids. Sample bidders are never served.
    """
    if not 0 < sigma < 0.5:
        raise ValueError("sigma must lie in (0, 1/2)")
    if isinstance(env, DownwardClosed):
        raise UnsupportedEnvironment("sigma_bspe supports unlimited and multi-unit environments")
    if isinstance(env, MultiUnit) and env.units < 2:
        raise UnsupportedEnvironment("sigma_bspe in a multi-unit environment needs units >= 2")
    if not isinstance(env, (UnlimitedSupply, MultiUnit)):
        raise UnsupportedEnvironment(f"unknown environment {env!r}")
    p = as_profile(p)
    coins = rng.random(p.n)
    if p.n < 2:
        return _reject(p.n)
    if isinstance(env, UnlimitedSupply):
        return _sigma_bspe_digital(p, sigma, coins)
    return _sigma_bspe_multiunit(p, sigma, coins, env.units)


def _sigma_bspe_digital(p, sigma, coins):
    views, in_sample_coin = _bspe_views(p, sigma, coins)
    served = [False] * p.n
    pay = [0.0] * p.n
    cache = {}
    for i, view in enumerate(views):
        if view is None:
            continue
        target, market, _, member_threshold = view
        key = id(target)
        if key not in cache:
            cache[key] = _bid_independent_extraction(p.bids, market, [p.bids[j] for j in target])
        price = cache[key][i]
        if price < INF and p.bids[i] >= price:
            served[i] = True
            pay[i] = float(max(price, member_threshold))
    return AuctionOutcome.from_lists(served, pay)


def _true_market(p, sigma, coins, i, bid):
    q = p.replace(i, bid)
    market, _ = partition_from_coins(q, sigma, coins)
    return q, market


def _wins_slot(p, sigma, coins, i, bid, units) -> bool:
    """Bidder i is in the realised market and among its ``units`` highest."""
    q, market = _true_market(p, sigma, coins, i, bid)
    if i not in market:
        return False
    ahead = sum(
        1 for j in market if j != i and (q.bids[j] > bid or (q.bids[j] == bid and j < i))
    )
    return ahead < units


def _slot_threshold(p, sigma, coins, i, units):
    """Infimum bid at which bidder i wins a slot.

    Slot membership is monotone in i's bid and can only change at another
    bidder's bid, so probing each candidate and the open interval above it is
    exact.
    """
    cands = sorted({0.0} | {float(p.bids[j]) for j in range(p.n) if j != i})
    for c, nxt in zip(cands, cands[1:] + [cands[-1] + 1.0]):
        if _wins_slot(p, sigma, coins, i, c, units) or _wins_slot(
            p, sigma, coins, i, (c + nxt) / 2, units
        ):
            return c
    return INF


def _sigma_bspe_multiunit(p, sigma, coins, units):
    views, _ = _bspe_views(p, sigma, coins)
    served = [False] * p.n
    pay = [0.0] * p.n
    for i, view in enumerate(views):
        if view is None:
            continue
        target, market, _, _ = view
        if not _wins_slot(p, sigma, coins, i, p.bids[i], units):
            continue
        tvals = [p.bids[j] for j in target]
        found = extraction_price(tvals, units)
        if found is None:
            continue
        _, price = found
        gates = _gate_with_self_raised([p.bids[j] for j in market], tvals)
        if not gates[market.index(i)] or p.bids[i] < price:
            continue
        served[i] = True
        pay[i] = float(max(price, _slot_threshold(p, sigma, coins, i, units)))
    return AuctionOutcome.from_lists(served, pay)


# ---------------------------------------------------------------------------
# Composite auctions


class Auction:
    """Callable auction: ``auction(profile, rng) -> AuctionOutcome``."""

    env = UnlimitedSupply()

    def run(self, p: BidProfile, rng) -> AuctionOutcome:  # pragma: no cover - abstract
        raise NotImplementedError

    def __call__(self, p, rng=None) -> AuctionOutcome:
        p = as_profile(p)
        if rng is None:
            rng = np.random.default_rng(0)
        out = self.run(p, rng)
        if CHECK_OUTCOMES:
            check_outcome(out, p, self.env)
        return out

    @property
    def name(self) -> str:
        return type(self).__name__.lower()


@dataclass(frozen=True)
class Vickrey(Auction):
    units: int = 1

    @property
    def env(self):
        return MultiUnit(self.units)

    def run(self, p, rng):
        return vickrey(p, self.units)


@dataclass(frozen=True)
class FixedPrice(Auction):
    price: float
    cap: int

    @property
    def env(self):
        return MultiUnit(self.cap)

    def run(self, p, rng):
        return fixed_price_sale(p, self.price, self.cap)


@dataclass(frozen=True)
class PerDigital(Auction):
    target: tuple

    def run(self, p, rng):
        return per_digital(p, self.target)


@dataclass(frozen=True)
class PerMultiUnit(Auction):
    target: tuple
    units: int

    @property
    def env(self):
        return MultiUnit(self.units)

    def run(self, p, rng):
        return per_multiunit(p, self.target, self.units)


@dataclass(frozen=True)
class Rspe(Auction):
    def run(self, p, rng):
        return rspe(p, rng)


@dataclass(frozen=True)
class Mixture(Auction):
    first: Auction
    first_weight: float
    second: Auction
    second_weight: float

    def __post_init__(self):
        if not (self.first_weight > 0 and self.second_weight > 0):
            raise ValueError("mixture weights must be positive")

    @property
    def first_probability(self) -> float:
        return self.first_weight / (self.first_weight + self.second_weight)

    @property
    def env(self):
        return None

    def run(self, p, rng):
        if rng.random() < self.first_probability:
            return self.first(p, rng)
        return self.second(p, rng)


@dataclass(frozen=True)
class LimitedFromUnlimited(Auction):
    inner: Auction
    units: int

    def __post_init__(self):
        if self.units < 2:
            raise ValueError("limited_from_unlimited needs units >= 2")

    @property
    def env(self):
        return MultiUnit(self.units)

    def run(self, p, rng):
        if p.n <= self.units:
            return self.inner(p, rng)
        # participants keep index order so the inner coins attach to bidders,
        # not to ranks
        top = sorted(p.order[: self.units])
        inner = self.inner(p.subset(top), rng)
        entry = float(p.value(self.units + 1))
        served = [False] * p.n
        pay = [0.0] * p.n
        for pos, i in enumerate(top):
            if inner.served[pos]:
                served[i] = True
                pay[i] = max(inner.payments[pos], entry)
        return AuctionOutcome.from_lists(served, pay)


@dataclass(frozen=True)
class SigmaBspe(Auction):
    sigma: float = DEFAULT_SIGMA
    environment: object = field(default_factory=UnlimitedSupply)

    @property
    def env(self):
        return self.environment

    def run(self, p, rng):
        return sigma_bspe(p, self.sigma, self.environment, rng)


class Dc651(Mixture):
    """sigma-BSPE with weight 4.51 mixed with single-item Vickrey at weight 2."""

    def __init__(self, sigma: float = DEFAULT_SIGMA, environment=None):
        environment = UnlimitedSupply() if environment is None else environment
        super().__init__(
            SigmaBspe(sigma, environment), DC_BSPE_WEIGHT, Vickrey(1), DC_VICKREY_WEIGHT
        )


class Theorem3(Auction):
    """Multi-unit auction against the envelope benchmark: the unlimited-supply
    reduction weighted ``inner_weight`` mixed with ``units``-unit Vickrey
    weighted (units-2)/units."""

    def __init__(self, units: int, inner: Auction | None = None, inner_weight: float | None = None):
        if units < 2:
            raise ValueError("theorem3 auction needs units >= 2")
        if inner_weight is None:
            from .analytics import lambda_ell

            inner_weight = lambda_ell(units).value
        if inner_weight <= 0:
            raise ValueError("inner weight must be positive")
        self.units = units
        self.inner_weight = inner_weight
        reduced = LimitedFromUnlimited(Rspe() if inner is None else inner, units)
        vickrey_weight = (units - 2) / units
        self.auction = (
            reduced
            if vickrey_weight == 0
            else Mixture(reduced, inner_weight, Vickrey(units), vickrey_weight)
        )

    @property
    def env(self):
        return MultiUnit(self.units)

    def run(self, p, rng):
        return self.auction(p, rng)


@dataclass(frozen=True)
class PayYourBid(Auction):
    """First-price single item sale; not truthful. Negative control."""

    def run(self, p, rng):
        served = [False] * p.n
        pay = [0.0] * p.n
        if p.n:
            i = p.order[0]
            served[i] = True
            pay[i] = float(p.bids[i])
        return AuctionOutcome.from_lists(served, pay)


@dataclass(frozen=True)
class RejectAll(Auction):
    def run(self, p, rng):
        return _reject(p.n)


@dataclass(frozen=True)
class FromFunction(Auction):
    """Wrap ``fn(profile, rng) -> AuctionOutcome`` as an auction."""

    fn: Callable
    label: str = "custom"

    def run(self, p, rng):
        return self.fn(p, rng)


# ---------------------------------------------------------------------------
# Functional entry points


def mixture(a1, w1, a2, w2, p, rng) -> AuctionOutcome:
    return Mixture(a1, w1, a2, w2)(p, rng)


def limited_from_unlimited(inner, units, p, rng) -> AuctionOutcome:
    return LimitedFromUnlimited(inner, units)(p, rng)


def theorem3_auction(p, units, inner=None, inner_weight=None, rng=None) -> AuctionOutcome:
    return Theorem3(units, inner, inner_weight)(p, rng)


def dc_auction_651(p, env=None, sigma: float = DEFAULT_SIGMA, rng=None) -> AuctionOutcome:
    return Dc651(sigma, env)(p, rng)
