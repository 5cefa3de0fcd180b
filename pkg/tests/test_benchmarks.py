from fractions import Fraction
from itertools import combinations

from hypothesis import given, settings
from hypothesis import strategies as st

from auction_lab import benchmarks as bm
from auction_lab.core import MultiUnit

bids = st.lists(st.integers(min_value=0, max_value=1000), min_size=2, max_size=12)


def test_documented_values():
    assert bm.f2((10, 7, 3)) == 14
    assert bm.f2l((5, 5, 5, 5), 3) == 15
    assert bm.maxv((10, 7, 3)) == 7
    assert bm.online_f((10, 7, 3)) == 28
    assert bm.efo_fixed_price((10, 7, 3)) == 14
    assert bm.efo_fixed_price((10, 1, 1)) == 10


def test_short_profiles():
    assert bm.f2((4,)) == 0
    assert bm.maxv(()) == 0
    assert bm.efo_fixed_price(()) == 0


def test_exact_arithmetic_with_fractions():
    p = (Fraction(1, 3), Fraction(1, 3), Fraction(1, 7))
    assert bm.f2(p) == Fraction(2, 3)


@given(bids)
def test_benchmark_order(v):
    second = sorted(v, reverse=True)[1]
    assert bm.f2(v) <= bm.online_f(v) <= bm.f2(v) + 2 * second
    assert bm.online_f(v) == max(4 * second, bm.f2(v))
    assert bm.efo_fixed_price(v) >= bm.f2(v)


@given(bids, st.integers(min_value=2, max_value=14))
def test_envelope_sandwich(v, units):
    efo = bm.efo2_multiunit(v, units)
    lo = bm.f2l(v, units)
    ranked = sorted(v, reverse=True) + [0]
    tail = ranked[units] if units < len(ranked) else 0
    assert lo <= efo <= lo + max(units - 2, 0) * tail + 1e-9


@settings(max_examples=200)
@given(bids)
def test_monotone_chain_matches_bruteforce(v):
    curve = bm.g_curve(v)
    g = {j: curve.value(j) for j in range(2, len(v) + 1)}
    ref = bm.envelope_bruteforce(g)
    for j in ref:
        assert abs(ref[j] - curve.hat(j)) <= 1e-9 * max(1, max(g.values()))


@given(st.lists(st.fractions(min_value=0, max_value=50), min_size=1, max_size=8))
def test_upper_envelope_is_concave_majorant(ys):
    xs = list(range(len(ys)))
    env = bm.upper_envelope(xs, ys)
    assert all(e >= y for e, y in zip(env, ys))
    for a, b, c in combinations(range(len(xs)), 3):
        # concavity: the middle point lies on or above the chord
        assert env[b] * (c - a) >= env[a] * (c - b) + env[c] * (b - a)


def test_multi_unit_fixed_price_envelope():
    assert bm.efo_fixed_price((10, 7, 3), MultiUnit(1)) == 10
    assert bm.efo_fixed_price((10, 7, 3), MultiUnit(2)) == 14
