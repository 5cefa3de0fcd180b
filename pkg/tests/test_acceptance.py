"""Acceptance criteria, one test each.

Every criterion records a PASS/FAIL line (with its runtime against the limit)
that is printed in the pytest terminal summary. Run the module directly to get
the same lines without pytest:

    python3 tests/test_acceptance.py
"""

from __future__ import annotations

import itertools
import math
import os
import subprocess
import sys
import time
from fractions import Fraction

import pytest

from auction_lab import analytics, harness
from auction_lab.auctions import (
    DEFAULT_SIGMA,
    PayYourBid,
    PerDigital,
    PerMultiUnit,
    SigmaBspe,
    Vickrey,
)
from auction_lab.core import BidProfile, MultiUnit, UnlimitedSupply
from auction_lab.online import ArrivalOrder, MaxPricer, RspePricer, online_sampling_auction, online_vs_benchmark

pytestmark = pytest.mark.acceptance

RESULTS: list[str] = []


class Criterion:
    """Collects sub-checks and the wall time of one criterion."""

    def __init__(self, number: int, title: str, limit: float | None):
        self.number, self.title, self.limit = number, title, limit
        self.checks: list[tuple[str, bool]] = []

    def check(self, label: str, ok) -> bool:
        self.checks.append((label, bool(ok)))
        return bool(ok)

    def __enter__(self):
        self.start = time.perf_counter()
        return self

    def __exit__(self, exc_type, exc, tb):
        elapsed = time.perf_counter() - self.start
        if exc_type is not None:
            self.checks.append((f"raised {exc_type.__name__}: {exc}", False))
        if self.limit is not None:
            self.checks.append((f"runtime {elapsed:.2f}s < {self.limit:g}s", elapsed < self.limit))
        self.ok = all(ok for _, ok in self.checks)
        line = f"{'PASS' if self.ok else 'FAIL'} criterion {self.number:2d}: {self.title} ({elapsed:.2f}s)"
        failed = [label for label, ok in self.checks if not ok]
        if failed:
            line += "\n    failed: " + "\n    failed: ".join(failed)
        RESULTS.append(line)
        return False

    def verdict(self):
        failed = [label for label, ok in self.checks if not ok]
        assert not failed, "; ".join(failed)


def test_c01_lambda_formula():
    with Criterion(1, "lambda_ell exact values and large-l range", 1.0) as c:
        c.check("lambda_ell(2) == 2", analytics.lambda_ell(2).exact == 2)
        c.check("lambda_ell(3) == 13/6", analytics.lambda_ell(3).exact == Fraction(13, 6))
        big = analytics.lambda_ell(1000).value
        c.check(f"lambda_ell(1000) = {big:.6f} in [2.40, 2.43]", 2.40 <= big <= 2.43)
    c.verdict()


def test_c02_online_f_ratio():
    with Criterion(2, "ratio against the online benchmark", 5.0) as c:
        for n in (2, 3, 4):
            c.check(f"ratio_online_f({n}) == 4", analytics.ratio_online_f(n).exact == 4)
        r5 = analytics.ratio_online_f(5).value
        c.check(f"ratio_online_f(5) = {r5:.7f} within 1e-5 of 4.104667", abs(r5 - 4.104667) < 1e-5)
        big = analytics.ratio_online_f(100_000).value
        c.check(f"|ratio_online_f(1e5) - 4.12| = {abs(big - 4.12):.6f} < 0.01", abs(big - 4.12) < 0.01)
        tail = analytics.tail_term(100_000).value
        ref = 1.5 * (1 + math.exp(-2))
        c.check(f"tail_term(1e5) = {tail:.7f} within 1e-4 of {ref:.6f}", abs(tail - ref) < 1e-4)
    c.verdict()


def test_c03_survival_closed_form_and_mc():
    with Criterion(3, "survival of f(B): closed form and Monte Carlo", 30.0) as c:
        closed = analytics.survival_f_benchmark(5, 10)
        c.check(f"survival_f_benchmark(5, 10) = {closed:.10f} within 1e-10 of 0.70175", abs(closed - 0.70175) <= 1e-10)
        est = harness.survival_f_benchmark_mc(5, 10, 1_000_000, seed=harness.DEFAULT_SEED)
        c.check(
            f"MC {est.mean:.5f} (se {est.stderr:.5f}) within 0.005 of closed form {closed:.5f}",
            abs(est.mean - closed) <= 0.005,
        )
    c.verdict()


def test_c04_recursion_grid():
    with Criterion(4, "recursive and closed survival agree on the grid", 5.0) as c:
        worst = 0.0
        for n in range(0, 7):
            for k in range(0, 4):
                for z in range(max(1, n + k), 101):
                    worst = max(worst, abs(analytics.survival_F_nk_recursive(n, k, z) - analytics.survival_F_nk(n, k, z)))
        c.check(f"max difference {worst:.3g} <= 1e-9", worst <= 1e-9)
    c.verdict()


def test_c05_expectation_quadrature():
    with Criterion(5, "closed-form E[f(B)] against quadrature", 5.0) as c:
        for n in (5, 8, 20):
            closed = analytics.expected_f_benchmark(n).value
            quad = analytics.expected_f_benchmark_quadrature(n)
            rel = abs(closed - quad) / closed
            c.check(f"n={n}: relative difference {rel:.3g} <= 1e-7", rel <= 1e-7)
    c.verdict()


def _suite_check(c, name, **kw):
    result = harness.property_suite(name, seed=harness.DEFAULT_SEED, **kw)
    c.check(f"{name}: {len(result.rows)} rows, first failure: {result.counterexample or 'none'}", result.passed)
    return result


def test_c06_lemma2_sandwich():
    with Criterion(6, "envelope sandwich and fast envelope vs brute force", 60.0) as c:
        _suite_check(c, "lemma2", profiles=10_000)
    c.verdict()


def test_c07_sigma_optimum():
    with Criterion(7, "optimal sampling bias", 1.0) as c:
        sigma, value = analytics.optimize_sigma()
        c.check(f"sigma* = {sigma:.7f} within 1e-6 of 0.290573", abs(sigma - 0.290573) <= 1e-6)
        c.check(f"objective {value:.7f} within 1e-6 of 0.221857", abs(value - 0.221857) <= 1e-6)
    c.verdict()


def test_c08_random_walk_dominance():
    with Criterion(8, "market dominates sample under the biased partition", 60.0) as c:
        for n in (20, 50):
            for sigma in (0.1, 0.2, 0.29):
                est = harness.dominance_probability(n, sigma, 100_000, seed=harness.DEFAULT_SEED + n)
                claim = 1 - (sigma / (1 - sigma)) ** 3
                c.check(
                    f"n={n} sigma={sigma}: {est.mean:.5f} >= {claim:.5f} - 3*{est.stderr:.5f}",
                    est.mean >= claim - 3 * est.stderr,
                )
    c.verdict()


# Audit grids. Deviations include every grid value, zero and points between.
VICKREY_GRID = list(itertools.product([0, 1, 2, 5, 10], repeat=3))
VICKREY_DEVIATIONS = [0, 0.5, 1, 1.5, 2, 3, 5, 7, 10, 12]
POWERS_GRID_5 = list(itertools.product([1, 2, 4, 8], repeat=5))
POWERS_GRID_4 = list(itertools.product([1, 2, 4, 8], repeat=4))
POWER_DEVIATIONS = [0, 0.5, 1, 1.5, 2, 3, 4, 6, 8, 10]
PER_TARGETS = [(2, 2, 2), (5, 1), (4, 4, 1), (10, 5, 2)]
AUDIT_SEEDS = range(5)


def test_c09_truthfulness_audits():
    with Criterion(9, "truthfulness audits and negative control", 120.0) as c:
        def audit(auction, profiles, deviations, seeds=(0,)):
            rep = harness.truthfulness_audit(auction, profiles, deviations, seeds)
            first = rep.violations[0] if rep.violations else None
            c.check(f"{rep.auction} {getattr(auction, 'units', '')}: {len(rep.violations)} violations in {rep.checks} checks, first {first}", rep.passed)

        for units in (1, 2, 3):
            audit(Vickrey(units), VICKREY_GRID, VICKREY_DEVIATIONS)
        for target in PER_TARGETS:
            audit(PerDigital(target), VICKREY_GRID, VICKREY_DEVIATIONS)
            audit(PerMultiUnit(target, 2), VICKREY_GRID, VICKREY_DEVIATIONS)
        audit(SigmaBspe(DEFAULT_SIGMA, UnlimitedSupply()), POWERS_GRID_5, POWER_DEVIATIONS, AUDIT_SEEDS)
        audit(SigmaBspe(DEFAULT_SIGMA, MultiUnit(2)), POWERS_GRID_4, POWER_DEVIATIONS, AUDIT_SEEDS)
        replay = harness.online_replay_audit(POWERS_GRID_4, POWER_DEVIATIONS, RspePricer(3), orders=4, seed=11)
        c.check(f"online replay: {len(replay.violations)} violations in {replay.checks} checks", replay.passed)
        broken = harness.truthfulness_audit(PayYourBid(), VICKREY_GRID, VICKREY_DEVIATIONS, (0,))
        c.check(f"pay-your-bid control reports violations ({len(broken.violations)})", not broken.passed)
    c.verdict()


def test_c10_sigma_bspe_revenue():
    with Criterion(10, "biased sampling revenue on a constant profile", 60.0) as c:
        p = BidProfile((1.0,) * 40)
        est = harness.mc_revenue(SigmaBspe(0.290573, UnlimitedSupply()), p, 100_000, seed=harness.DEFAULT_SEED)
        bound = 0.2218 * 38
        c.check(f"E[revenue] {est.mean:.4f} >= {bound:.4f} - 3*{est.stderr:.4f}", est.mean >= bound - 3 * est.stderr)
    c.verdict()


def test_c11_online_two_bidders():
    with Criterion(11, "online auction with two bidders", 1.0) as c:
        revs = [online_sampling_auction((10, 4), ArrivalOrder(o), MaxPricer()).revenue for o in ((0, 1), (1, 0))]
        mean = Fraction(sum(Fraction(r) for r in revs), 2)
        c.check(f"expected revenue {mean} == 2", mean == 2)
        _, bench, ratio = online_vs_benchmark((10, 4), MaxPricer(), "f2")
        c.check(f"ratio {ratio} against F2 = {bench} is 4", ratio == 4.0)
    c.verdict()


def test_c12_inequality_chains():
    with Criterion(12, "leave-one-out chains", 30.0) as c:
        _suite_check(c, "theorem5-chain", profiles=10_000)
        _suite_check(c, "maxv-chain", profiles=10_000)
    c.verdict()


def test_c13_equal_revenue_facts():
    with Criterion(13, "equal-revenue tail, Vickrey revenue, order statistic", 60.0) as c:
        result = harness.property_suite("vickrey-equal-revenue", seed=harness.DEFAULT_SEED, trials=1_000_000)
        for row in result.rows:
            c.check(f"{row.params}: statistic {row.statistic:.6g} vs {row.bound:.6g}", row.passed is not False)
        c.check("expected_order_statistic(5, 3) == 5/2", analytics.expected_order_statistic(5, 3, exact=True) == Fraction(5, 2))
    c.verdict()


def _verify_csv(workers: int) -> bytes:
    env = dict(os.environ)
    env.pop("AUCTION_LAB_SEED", None)
    proc = subprocess.run(
        [sys.executable, "-m", "auction_lab", "verify", "--suite", "all", "--seed", "7", "--workers", str(workers)],
        capture_output=True,
        env=env,
        check=False,
    )
    assert proc.returncode in (0, 1), proc.stderr.decode()
    return proc.stdout


def test_c14_determinism():
    with Criterion(14, "verify output is byte-identical across runs and worker counts", None) as c:
        first, second, parallel = _verify_csv(1), _verify_csv(1), _verify_csv(2)
        c.check(f"CSV is non-empty ({len(first)} bytes)", len(first) > 0 and first.count(b"\n") > 1)
        c.check("two single-worker runs identical", first == second)
        c.check("single-worker and two-worker runs identical", first == parallel)
    c.verdict()


def main() -> int:
    tests = [v for k, v in sorted(globals().items()) if k.startswith("test_c")]
    failures = 0
    for fn in tests:
        try:
            fn()
        except AssertionError:
            failures += 1
    print("\n".join(RESULTS))
    return 1 if failures else 0


if __name__ == "__main__":
    sys.exit(main())
