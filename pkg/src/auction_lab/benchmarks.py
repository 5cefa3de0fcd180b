"""Benchmark functions auctions are measured against.

All functions accept a :class:`BidProfile` or any sequence of bids and work on
the descending view b_(1) >= b_(2) >= ... . They use plain Python arithmetic,
so ``Fraction`` inputs give exact results.
"""

from __future__ import annotations

from dataclasses import dataclass

from .core import (
    DownwardClosed,
    MultiUnit,
    UnlimitedSupply,
    UnsupportedEnvironment,
    as_profile,
)

__all__ = [
    "GCurve",
    "f2",
    "f2l",
    "maxv",
    "g_curve",
    "upper_envelope",
    "envelope_bruteforce",
    "efo2_multiunit",
    "online_f",
    "efo_fixed_price",
]


def f2(p):
    """Best fixed-price revenue with at least two winners: max_{k>=2} k*b_(k)."""
    v = as_profile(p).ranked
    if len(v) < 2:
        return 0
    return max(k * v[k - 1] for k in range(2, len(v) + 1))


def f2l(p, units: int):
    """``f2`` restricted to at most ``units`` winners."""
    if units < 2:
        raise ValueError(f"f2l needs units >= 2, got {units}")
    v = as_profile(p).ranked
    top = min(units, len(v))
    if top < 2:
        return 0
    return max(k * v[k - 1] for k in range(2, top + 1))


def maxv(p):
    """Best k-unit Vickrey revenue over all supplies: max_{1<=k<n} k*b_(k+1)."""
    v = as_profile(p).ranked
    if len(v) < 2:
        return 0
    return max(k * v[k] for k in range(1, len(v)))


def online_f(p):
    """max(4*b_(2), 3*b_(3), 4*b_(4), ..., n*b_(n)).

    Only the coefficient on b_(2) differs from ``f2``.
    """
    v = as_profile(p).ranked
    if len(v) < 2:
        return 0
    return max([4 * v[1]] + [j * v[j - 1] for j in range(3, len(v) + 1)])


def _cross(o, a, b):
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


def upper_envelope(xs, ys) -> list:
    """Least concave majorant of points with strictly increasing integer ``xs``,
    evaluated back at every ``x`` (monotone chain, upper hull only)."""
    pts = list(zip(xs, ys))
    hull = []
    for pt in pts:
        while len(hull) >= 2 and _cross(hull[-2], hull[-1], pt) >= 0:
            hull.pop()
        hull.append(pt)
    out = []
    h = 0
    for x, y in pts:
        while hull[h][0] < x:
            h += 1
        if hull[h][0] == x:
            out.append(hull[h][1])
            continue
        (xa, ya), (xb, yb) = hull[h - 1], hull[h]
        out.append((ya * (xb - x) + yb * (x - xa)) / (xb - xa))
    return out


def envelope_bruteforce(g: dict) -> dict:
    """Definitional envelope: for each j, the max over i <= j <= k of the chord
    value between (i, g(i)) and (k, g(k)). O(m^3); kept as a reference."""
    js = sorted(g)
    out = {}
    for j in js:
        best = g[j]
        for i in js:
            if i > j:
                break
            for k in js:
                if k < j or k == i:
                    continue
                val = (g[i] * (k - j) + g[k] * (j - i)) / (k - i)
                if val > best:
                    best = val
        out[j] = best
    return out


@dataclass(frozen=True)
class GCurve:
    """g(j) = j * v_(j) for j = 1..n and its concave envelope on [start, n]."""

    g: tuple
    envelope: tuple
    start: int = 2

    @property
    def n(self) -> int:
        return len(self.g)

    def value(self, j: int):
        return self.g[j - 1]

    def hat(self, j: int):
        if not self.start <= j <= self.n:
            raise ValueError(f"envelope defined on [{self.start}, {self.n}], got {j}")
        return self.envelope[j - self.start]

    def efo(self, units: int):
        """Max of the envelope over [start, min(units, n)]."""
        top = min(units, self.n)
        if top < self.start:
            return 0
        return max(self.envelope[: top - self.start + 1])


def g_curve(p, start: int = 2) -> GCurve:
    v = as_profile(p).ranked
    n = len(v)
    if n < start:
        raise ValueError(f"g_curve needs at least {start} bids, got {n}")
    g = tuple(j * v[j - 1] for j in range(1, n + 1))
    xs = list(range(start, n + 1))
    env = upper_envelope(xs, g[start - 1 :])
    return GCurve(g, tuple(env), start)


def efo2_multiunit(p, units: int):
    """Envy-free benchmark for ``units`` identical items: the maximum of the
    concave envelope of j*v_(j) over j in [2, min(units, n)]."""
    if units < 2:
        raise ValueError(f"efo2_multiunit needs units >= 2, got {units}")
    p = as_profile(p)
    if p.n < 2:
        return 0
    return g_curve(p).efo(units)


def efo_fixed_price(p, env=None):
    """Envy-free optimum without the two-winner restriction.

    Unlimited supply: max_{k>=1} k*b_(k). Multi-unit: max of the concave
    envelope of j*v_(j) (starting at j=1) over [1, units].
    """
    env = UnlimitedSupply() if env is None else env
    p = as_profile(p)
    if p.n == 0:
        return 0
    if isinstance(env, UnlimitedSupply):
        v = p.ranked
        return max(k * v[k - 1] for k in range(1, p.n + 1))
    if isinstance(env, MultiUnit):
        return g_curve(p, start=1).efo(env.units)
    if isinstance(env, DownwardClosed):
        raise UnsupportedEnvironment(
            "envy-free optimum for general downward-closed environments is not implemented"
        )
    raise UnsupportedEnvironment(f"unknown environment {env!r}")
