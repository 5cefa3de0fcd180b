import math
from itertools import permutations

import pytest

from auction_lab.online import (
    ArrivalOrder,
    MaxPricer,
    NeverSell,
    OnlineSampling,
    RspePricer,
    expected_online_revenue,
    online_log,
    online_sampling_auction,
    online_vs_benchmark,
    revenue_decomposition_check,
)
from auction_lab.core import rng_for


def test_two_bidder_orders():
    assert online_sampling_auction((10, 4), ArrivalOrder((0, 1)), MaxPricer()).revenue == 0
    assert online_sampling_auction((10, 4), ArrivalOrder((1, 0)), MaxPricer()).revenue == 4
    assert expected_online_revenue((10, 4), MaxPricer()) == 2
    assert expected_online_revenue((3, 3), MaxPricer()) == 3
    assert expected_online_revenue((7,), MaxPricer()) == 0


def test_arrival_order_must_be_permutation():
    with pytest.raises(ValueError):
        ArrivalOrder((0, 0, 1))
    assert ArrivalOrder.uniform(5, rng_for(1), seed=1).provenance == "uniform-random(1)"


def test_log_is_monotone_and_starts_at_infinity():
    log = list(online_log((5, 2, 8, 1), ArrivalOrder((2, 0, 3, 1)), MaxPricer()))
    assert [d.round for d in log] == [1, 2, 3, 4]
    assert log[0].price == math.inf and not log[0].served
    assert [d.bidder for d in log] == [2, 0, 3, 1]


@pytest.mark.parametrize("p", [(10, 4), (3, 3, 3), (9, 5, 5, 1), (8, 6, 4, 2, 1)])
@pytest.mark.parametrize("pricer", [MaxPricer(), NeverSell(), RspePricer(5)], ids=["max", "never", "rspe"])
def test_decomposition_is_exact_on_small_profiles(p, pricer):
    report = revenue_decomposition_check(p, pricer)
    assert report.exact
    assert math.isclose(report.online, report.decomposed, abs_tol=1e-12)


def test_decomposition_monte_carlo_agrees():
    report = revenue_decomposition_check(tuple(range(1, 9)), MaxPricer(), trials=4000, seed=3)
    assert not report.exact
    assert abs(report.difference) <= 4 * report.difference_se


def test_rspe_pricer_values():
    assert RspePricer(0)(2, (4.0, 4.0)) == 4.0
    seen = {RspePricer(s)(3, (10.0, 4.0)) for s in range(40)}
    assert seen == {10.0, 4.0}
    assert RspePricer(0)(1, ()) == math.inf


def test_rspe_pricer_depends_only_on_multiset():
    pricer = RspePricer(7)
    assert pricer(4, (9.0, 3.0, 1.0)) == RspePricer(7)(4, (9.0, 3.0, 1.0))


def test_benchmark_ratios():
    _, bench, ratio = online_vs_benchmark((10, 4), MaxPricer(), "f2")
    assert (bench, ratio) == (8.0, 4.0)
    _, bench, ratio = online_vs_benchmark((10, 4), MaxPricer(), "maxv")
    assert (bench, ratio) == (4.0, 2.0)
    est, _, _ = online_vs_benchmark(tuple(range(1, 11)), RspePricer(1), "f2", trials=500, seed=2)
    assert est.trials == 500 and est.mean > 0
    with pytest.raises(ValueError):
        online_vs_benchmark((1, 2), MaxPricer(), "nope")


def test_online_auction_wrapper_matches_explicit_orders():
    auction = OnlineSampling(MaxPricer())
    p = (6, 2, 9)
    orders = {tuple(o) for o in permutations(range(3))}
    out = auction(p, rng_for(0))
    assert any(out == online_sampling_auction(p, ArrivalOrder(o), MaxPricer()) for o in orders)
