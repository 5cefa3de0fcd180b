"""Closed-form competitive ratios and equal-revenue distribution tooling.

Alternating binomial sums are evaluated in floating point and, for moderate
sizes, again in exact rational arithmetic; :class:`RatioReport` carries both.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np

from .core import BidProfile

__all__ = [
    "EXACT_LIMIT",
    "RatioReport",
    "QuadratureError",
    "lambda_ell",
    "tail_term",
    "ratio_online_f",
    "survival_F_nk",
    "survival_F_nk_recursive",
    "survival_f_benchmark",
    "survival_f_benchmark_direct",
    "expected_f_benchmark_direct",
    "expected_f_benchmark",
    "expected_f_benchmark_quadrature",
    "adaptive_simpson",
    "sigma_objective",
    "optimize_sigma",
    "golden_section_max",
    "sample_equal_revenue",
    "equal_revenue_from_uniform",
    "expected_order_statistic",
    "theorem3_ratio",
    "theorem4_ratio",
]

EXACT_LIMIT = 64


class QuadratureError(ArithmeticError):
    pass


@dataclass(frozen=True)
class RatioReport:
    name: str
    n: int
    value: float
    exact: Fraction | None = None
    note: str = ""

    def __post_init__(self):
        if self.exact is not None:
            ref = float(self.exact)
            if abs(ref - self.value) > 1e-9 * max(1.0, abs(ref)):
                raise ArithmeticError(
                    f"{self.name}({self.n}): float {self.value!r} disagrees with exact {ref!r}"
                )

    def __float__(self):
        return self.value


def _alternating_sum_float(n: int) -> float:
    # sum_{i=2}^{n} (i/(i-1)) C(n-1, i-1) (-1/n)^(i-1), with c = C(n-1,i-1)/n^(i-1)
    total = 0.0
    c = 1.0
    for i in range(2, n + 1):
        c *= (n - i + 1) / n / (i - 1)
        if c == 0.0:
            break
        term = i / (i - 1) * c
        total += -term if (i - 1) % 2 else term
    return total


def _alternating_sum_exact(n: int) -> Fraction:
    return sum(
        (Fraction(i, i - 1) * math.comb(n - 1, i - 1) * Fraction(-1, n) ** (i - 1) for i in range(2, n + 1)),
        Fraction(0),
    )


def lambda_ell(units: int, exact: bool | None = None) -> RatioReport:
    """Optimal ratio of an unlimited-supply auction with ``units`` bidders
    against the two-winner fixed-price benchmark."""
    if units < 2:
        raise ValueError("lambda_ell needs units >= 2")
    exact = units <= EXACT_LIMIT if exact is None else exact
    value = 1.0 - _alternating_sum_float(units)
    rational = 1 - _alternating_sum_exact(units) if exact else None
    return RatioReport("lambda_ell", units, value, rational, "1 - sum_i (i/(i-1)) C(l-1,i-1) (-1/l)^(i-1)")


def tail_term(n: int, exact: bool | None = None) -> RatioReport:
    """(3n / (2(n-2))) * ((1-2/n)^(n-1) + 1 - 2/n): the extra ratio paid for
    the 4*b_(2) coefficient."""
    if n < 3:
        raise ValueError("tail_term needs n >= 3")
    exact = n <= EXACT_LIMIT if exact is None else exact
    value = 3 * n / (2 * (n - 2)) * (math.exp((n - 1) * math.log1p(-2 / n)) + 1 - 2 / n)
    rational = None
    if exact:
        q = 1 - Fraction(2, n)
        rational = Fraction(3 * n, 2 * (n - 2)) * (q ** (n - 1) + q)
    return RatioReport("tail_term", n, value, rational)


def ratio_online_f(n: int, exact: bool | None = None) -> RatioReport:
    """Optimal offline ratio against max(4b_(2), 3b_(3), ..., n b_(n)).

    For n <= 4 the benchmark is 4*b_(2) and the ratio is exactly 4.
    """
    if n < 2:
        raise ValueError("ratio_online_f needs n >= 2")
    if n <= 4:
        return RatioReport("ratio_online_f", n, 4.0, Fraction(4), "benchmark is 4*b_(2) for n <= 4")
    lam = lambda_ell(n, exact)
    tail = tail_term(n, exact)
    rational = lam.exact + tail.exact if lam.exact is not None else None
    return RatioReport("ratio_online_f", n, lam.value + tail.value, rational, "lambda_n + tail_term(n)")


def theorem3_ratio(units: int) -> RatioReport:
    lam = lambda_ell(units)
    w = Fraction(units - 2, units)
    return RatioReport(
        "theorem3_ratio",
        units,
        lam.value + float(w),
        lam.exact + w if lam.exact is not None else None,
        "lambda_l + (l-2)/l",
    )


# ---------------------------------------------------------------------------
# Survival functions under the equal-revenue distribution


def survival_F_nk(n: int, k: int, z: float) -> float:
    """Pr[max_i (k+i) V_i >= z] for n i.i.d. equal-revenue draws."""
    if n < 0 or k < 0:
        raise ValueError("n and k must be nonnegative")
    if n == 0:
        return 0.0
    if z <= n + k:
        return 1.0
    return 1.0 - ((z - k) / z) ** n * ((z - k - n) / (z - k))


def survival_F_nk_recursive(n: int, k: int, z: float) -> float:
    """Same probability from the first-passage decomposition, memoised."""
    if n < 0 or k < 0:
        raise ValueError("n and k must be nonnegative")
    if z <= n + k:
        return 1.0 if n > 0 else 0.0

    @lru_cache(maxsize=None)
    def tail(m: int, kk: int) -> float:
        if m == 0:
            return 0.0
        return math.fsum(
            math.comb(m, i) * ((kk + i) / z) ** i * (1.0 - tail(m - i, kk + i)) for i in range(1, m + 1)
        )

    return tail(n, k)


def survival_f_benchmark(n: int, z: float) -> float:
    """Pr[f(B) >= z] for B ~ equal-revenue^n, f = max(4b_(2), 3b_(3), ...)."""
    if n <= 4:
        raise ValueError("survival_f_benchmark needs n >= 5; for n <= 4 f(B) = 4*b_(2) (see ratio_online_f)")
    if z <= n:
        return 1.0
    a = n / z
    b = a * ((z - 1) / z) ** (n - 1) * ((z - n) / (z - 1))
    c = 6 * n * (n - 1) / z**2 * ((z - 2) / z) ** (n - 2) * ((z - n) / (z - 2))
    return a - b + c


def _below_thresholds(n: int, thresholds) -> float:
    """Pr[V_j < thresholds[j-1] for every j] for n equal-revenue draws sorted
    high to low.

    The event is "at most j-1 draws reach thresholds[j-1]" for each j. Levels
    are swept from high to low while tracking how many draws sit above the
    current level; each band between levels takes a binomial share of the
    draws not yet placed.
    """
    cap = {}
    for j, t in enumerate(thresholds, start=1):
        cap[t] = min(cap.get(t, n), j - 1)
    levels = sorted(cap, reverse=True)
    tail = lambda x: min(1.0, 1.0 / x)  # noqa: E731  Pr[v >= x]
    dist = {0: 1.0}  # draws above the previous level -> probability
    upper = math.inf
    for level in levels:
        band = (tail(level) - (0.0 if upper == math.inf else tail(upper)))
        nxt = {}
        for above, pr in dist.items():
            rest = n - above
            for extra in range(0, min(rest, cap[level] - above) + 1):
                w = pr * math.comb(rest, extra) * band**extra
                nxt[above + extra] = nxt.get(above + extra, 0.0) + w
        dist = nxt
        upper = level
    below = 1.0 - tail(upper)
    return math.fsum(pr * below ** (n - above) for above, pr in dist.items())


def survival_f_benchmark_direct(n: int, z: float) -> float:
    """Pr[f(B) >= z] from the order statistics directly (any n >= 2).

    f(B) < z exactly when 4 V_2 < z and j V_j < z for j >= 3. This is an
    independent reference for the closed form above.
    """
    if n < 2:
        raise ValueError("need n >= 2")
    if z <= 0:
        return 1.0
    thresholds = [math.inf, z / 4] + [z / j for j in range(3, n + 1)]
    return 1.0 - _below_thresholds(n, thresholds)


def expected_f_benchmark_direct(n: int, tol: float = 1e-9) -> float:
    """E[f(B)] by quadrature of the direct survival function."""
    if n < 2:
        raise ValueError("need n >= 2")
    floor = 4.0 if n <= 4 else float(n)  # f(B) >= min over the feasible terms

    def integrand(t):
        if t == 0.0:
            return 8.0 * n * (n - 1)  # z^2 Pr[4 V_2 >= z] as z -> inf
        return survival_f_benchmark_direct(n, 1.0 / t) / (t * t)

    return floor + adaptive_simpson(integrand, 0.0, 1.0 / floor, tol)


def _survival_over_t2(n: int, t: float) -> float:
    # survival(1/t) / t^2 without the cancellation in its first two terms
    if t == 0.0:
        return 8.0 * n * (n - 1)
    if n * t >= 1.0:
        # z <= n: survival is 1
        return 1.0 / (t * t)
    log_prod = (n - 2) * math.log1p(-t) + math.log1p(-n * t)
    first = -n * math.expm1(log_prod) / t
    second = 6.0 * n * (n - 1) * math.exp((n - 3) * math.log1p(-2 * t)) * (1 - n * t)
    return first + second


def adaptive_simpson(f, a: float, b: float, tol: float = 1e-9, max_depth: int = 50) -> float:
    """Adaptive Simpson quadrature with absolute tolerance ``tol``."""

    def simpson(fa, fm, fb, a, b):
        return (b - a) / 6.0 * (fa + 4.0 * fm + fb)

    def recurse(a, b, fa, fm, fb, whole, tol, depth):
        m = (a + b) / 2
        lm, rm = (a + m) / 2, (m + b) / 2
        flm, frm = f(lm), f(rm)
        left = simpson(fa, flm, fm, a, m)
        right = simpson(fm, frm, fb, m, b)
        delta = left + right - whole
        if abs(delta) <= 15 * tol:
            return left + right + delta / 15
        if depth >= max_depth:
            raise QuadratureError(f"adaptive Simpson did not converge on [{a}, {b}]")
        return recurse(a, m, fa, flm, fm, left, tol / 2, depth + 1) + recurse(
            m, b, fm, frm, fb, right, tol / 2, depth + 1
        )

    fa, fb, fm = f(a), f(b), f((a + b) / 2)
    return recurse(a, b, fa, fm, fb, simpson(fa, fm, fb, a, b), tol, 0)


def expected_f_benchmark_quadrature(n: int, tol: float = 1e-9) -> float:
    """n + integral_n^inf Pr[f(B) >= z] dz, integrated in t = 1/z."""
    if n <= 4:
        raise ValueError("expected_f_benchmark needs n >= 5")
    return n + adaptive_simpson(lambda t: _survival_over_t2(n, t), 0.0, 1.0 / n, tol)


def expected_f_benchmark(n: int, exact: bool | None = None) -> RatioReport:
    """E[f(B)] from the closed form; equals n * ratio_online_f(n)."""
    if n <= 4:
        raise ValueError("expected_f_benchmark needs n >= 5")
    r = ratio_online_f(n, exact)
    return RatioReport(
        "expected_f_benchmark", n, n * r.value, n * r.exact if r.exact is not None else None
    )


# ---------------------------------------------------------------------------
# sigma for biased sampling


def sigma_objective(sigma: float) -> float:
    """sigma - (sigma/(1-sigma))^3: the guaranteed extraction fraction."""
    return sigma - (sigma / (1 - sigma)) ** 3


def golden_section_max(f, a: float, b: float, tol: float = 1e-12) -> float:
    invphi = (math.sqrt(5) - 1) / 2
    c, d = b - invphi * (b - a), a + invphi * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc > fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = f(d)
    return (a + b) / 2


def optimize_sigma(check: bool = True) -> tuple:
    """Maximiser of ``sigma_objective`` on (0, 1/2) and the maximum.

    Stationarity 1 = 3 s^2 / (1-s)^4 reduces to sqrt(3) s = (1-s)^2, whose
    root in (0, 1/2) is the smaller root of s^2 - (2+sqrt3) s + 1.
    """
    bq = 2 + math.sqrt(3)
    sigma = 2 / (bq + math.sqrt(bq * bq - 4))  # small root, cancellation-free
    if check:
        gs = golden_section_max(sigma_objective, 1e-9, 0.5 - 1e-9)
        if abs(gs - sigma) > 1e-6:
            raise ArithmeticError(f"golden-section optimum {gs} disagrees with {sigma}")
    return sigma, sigma_objective(sigma)


def theorem4_ratio(sigma: float | None = None) -> RatioReport:
    """1/objective(sigma) + 2: biased sampling mixed with single-item Vickrey."""
    s = optimize_sigma()[0] if sigma is None else sigma
    return RatioReport("theorem4_ratio", 0, 1 / sigma_objective(s) + 2, None, "1/(s - (s/(1-s))^3) + 2")


# ---------------------------------------------------------------------------
# Equal-revenue distribution


def equal_revenue_from_uniform(u):
    """Inverse CDF: 1/(1-u) maps [0,1) onto [1, inf) with Pr[v > x] = 1/x."""
    return 1.0 / (1.0 - np.asarray(u, dtype=float))


def sample_equal_revenue(n: int, rng: np.random.Generator) -> BidProfile:
    if n < 1:
        raise ValueError("need n >= 1")
    return BidProfile(tuple(equal_revenue_from_uniform(rng.random(n)).tolist()))


def expected_order_statistic(n: int, k: int, exact: bool = False):
    """E[v_(k)] = n/(k-1) for the k-th largest of n equal-revenue draws."""
    if k == 1:
        raise ValueError("the largest of equal-revenue draws has infinite expectation")
    if not 2 <= k <= n:
        raise ValueError("need 2 <= k <= n")
    return Fraction(n, k - 1) if exact else n / (k - 1)
