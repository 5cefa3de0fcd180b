import math

import numpy as np
import pytest

from auction_lab import benchmarks as bm
from auction_lab import harness as hz
from auction_lab.auctions import Vickrey
from auction_lab.core import rng_for


def test_mc_revenue_is_worker_independent():
    a = hz.mc_revenue(Vickrey(1), (5, 3, 1), 5000, seed=4, workers=1)
    b = hz.mc_revenue(Vickrey(1), (5, 3, 1), 5000, seed=4, workers=2)
    assert a == b and a.mean == 3 and a.stderr == 0


def test_median_of_means_is_robust():
    values = np.ones(3200)
    values[0] = 1e9
    mom, spread = hz.median_of_means(values)
    assert mom == 1.0 and spread >= 0


def test_dominance_walk_matches_partition():
    n, sigma = 12, 0.29
    coins = rng_for(3).random((2000, n))
    p = tuple(range(n, 0, -1))
    walk = hz._walk_survives(coins[:, 2:], sigma)
    direct = np.array([hz.partition_dominates(p, sigma, c) for c in coins])
    assert np.array_equal(walk, direct)


def test_dominance_probability_claim():
    est = hz.dominance_probability(20, 0.2, 20_000, seed=5)
    assert est.mean >= 1 - (0.2 / 0.8) ** 3 - 3 * est.stderr


@pytest.mark.parametrize("name", sorted(hz.GENERATORS))
def test_generators_are_seeded(name):
    a = hz.generate_profiles(name, 10, 6, 1, 2)
    assert a.shape == (10, 6) and (a >= 0).all()
    assert np.array_equal(a, hz.generate_profiles(name, 10, 6, 1, 2))


def test_vectorised_rows_match_library():
    s = hz._desc(hz.generate_profiles("uniform", 50, 7, 3))
    for r in range(50):
        row = s[r].tolist()
        assert math.isclose(hz._f2_rows(s)[r], bm.f2(row))
        assert math.isclose(hz._maxv_rows(s)[r], bm.maxv(row))
        assert math.isclose(hz._online_f_rows(s)[r], bm.online_f(row))
        assert math.isclose(hz._f2l_rows(s, 3)[r], bm.f2l(row, 3))


CHEAP_SUITES = ["lemma2", "f-vs-f2-identity", "theorem5-chain", "maxv-chain", "factorization"]


@pytest.mark.parametrize("name", CHEAP_SUITES)
def test_suites_pass_and_controls_fail(name):
    ok = hz.property_suite(name, seed=3, profiles=300, trials=200_000)
    assert ok.passed, ok.counterexample
    bad = hz.property_suite(name, seed=3, profiles=300, trials=200_000, control=True)
    assert not bad.passed and bad.counterexample


def test_recursion_suite_and_control():
    ok = hz.property_suite("recursion", seed=3, trials=200_000)
    assert ok.passed, ok.counterexample
    info = [r for r in ok.rows if r.passed is None]
    assert info and all("closed-form" in r.params for r in info)
    assert not hz.property_suite("recursion", seed=3, trials=200_000, control=True).passed


def test_vickrey_suite_control_fails():
    assert not hz.property_suite("vickrey-equal-revenue", seed=3, trials=100_000, control=True).passed


def test_unknown_suite_rejected():
    with pytest.raises(ValueError):
        hz.property_suite("nope")


def test_csv_format():
    rows = [hz.SuiteRow("s", "a=1", 1.5, 2, -0.5, False), hz.SuiteRow("s", "b", math.inf, 0, 0, None)]
    text = hz.rows_to_csv(rows)
    assert text.splitlines() == [
        "suite,params,statistic,bound,margin,pass",
        "s,a=1,1.5,2,-0.5,false",
        "s,b,inf,0,0,info",
    ]
