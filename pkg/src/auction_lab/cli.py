"""Command-line front end.

Every subcommand parses its inputs, calls the library and writes CSV. Exit
codes: 0 success, 1 a verification suite failed, 2 bad input or usage.
"""

from __future__ import annotations

import argparse
import csv
import io
import os
import sys

from . import analytics, benchmarks, harness
from .auctions import (
    DEFAULT_SIGMA,
    Dc651,
    LimitedFromUnlimited,
    Rspe,
    SigmaBspe,
    Theorem3,
    Vickrey,
)
from .core import BidProfile, MultiUnit, UnlimitedSupply, UnsupportedEnvironment, rng_for
from .instances import Instance, InstanceError, dump_instance, load_instance
from .online import MaxPricer, RspePricer, online_vs_benchmark

SEED_ENV = "AUCTION_LAB_SEED"
EXIT_OK, EXIT_FAILED, EXIT_INVALID = 0, 1, 2

# large-l evaluation point for the limited-supply ratio and the lambda limit
LARGE_UNITS = 1000
LIMIT_N = 100_000
# published headline values, reported next to what the formulas give
PUBLISHED = {"limited_supply": 3.24, "downward_closed": 6.5, "online_f": 4.12, "lambda_limit": 2.42}


class CliError(Exception):
    """Bad input; reported on stderr with exit code 2."""


def _fmt(x) -> str:
    if isinstance(x, str):
        return x
    if isinstance(x, bool):
        return "true" if x else "false"
    return format(float(x), ".12g")


def _csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def _emit(text: str, path: str | None):
    if path:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def resolve_seed(flag: int | None) -> int:
    """Flag, else $AUCTION_LAB_SEED, else the built-in default."""
    if flag is not None:
        return flag
    raw = os.environ.get(SEED_ENV)
    if raw is None or raw.strip() == "":
        return harness.DEFAULT_SEED
    try:
        return int(raw)
    except ValueError:
        raise CliError(f"{SEED_ENV} must be an integer, got {raw!r}") from None


def _positive(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return value


def _instance(path) -> Instance:
    try:
        return load_instance(path)
    except OSError as err:
        raise CliError(f"{path}: {err.strerror}") from None
    except InstanceError as err:
        raise CliError(f"{path}: {err}") from None


# ---------------------------------------------------------------------------
# Subcommands


def cmd_bench(args) -> int:
    inst = _instance(args.instance)
    p, env = inst.profile, inst.environment
    rows = [
        ("f2", benchmarks.f2(p)),
        ("maxv", benchmarks.maxv(p)),
        ("online_f", benchmarks.online_f(p)),
    ]
    units = args.units or (env.units if isinstance(env, MultiUnit) else None)
    if units is not None and units >= 2:
        rows.append(("f2l", benchmarks.f2l(p, units)))
        rows.append(("efo2", benchmarks.efo2_multiunit(p, units)))
    elif p.n >= 2:
        rows.append(("efo2", benchmarks.efo2_multiunit(p, p.n)))
    try:
        rows.append(("efo", benchmarks.efo_fixed_price(p, env)))
    except UnsupportedEnvironment:
        pass
    _emit(_csv(["benchmark", "value"], rows), args.out)
    return EXIT_OK


def cmd_ratios(args) -> int:
    if args.max_n < 2:
        raise CliError("--max-n must be >= 2")
    if args.exact and args.max_n > analytics.EXACT_LIMIT:
        raise CliError(f"--exact supports --max-n up to {analytics.EXACT_LIMIT}")
    rows = []
    for n in range(2, args.max_n + 1):
        lam = analytics.lambda_ell(n, exact=args.exact or None)
        ratio = analytics.ratio_online_f(n, exact=args.exact or None)
        tail = analytics.tail_term(n, exact=args.exact or None) if n >= 3 else None
        if args.exact:
            cells = [str(lam.exact), str(ratio.exact), "" if tail is None else str(tail.exact)]
        else:
            cells = [lam.value, ratio.value, "" if tail is None else tail.value]
        rows.append([n] + cells)
    _emit(_csv(["n", "lambda_ell", "ratio_online_f", "tail_term"], rows), args.out)
    return EXIT_OK


def _auction_for(kind: str, args, env):
    sigma = args.sigma if args.sigma is not None else DEFAULT_SIGMA
    units = args.units or (env.units if isinstance(env, MultiUnit) else None)
    if kind == "vickrey":
        return Vickrey(units or 1), "f2"
    if kind == "rspe":
        return Rspe(), "f2"
    if kind == "limited-rspe":
        if not units:
            raise CliError("limited-rspe needs --units or a multi_unit instance")
        return LimitedFromUnlimited(Rspe(), units), "efo2"
    if kind == "sigma-bspe":
        return SigmaBspe(sigma, env), "efo"
    if kind == "dc651":
        return Dc651(sigma, env), "efo"
    if kind == "theorem3":
        if not units:
            raise CliError("theorem3 needs --units or a multi_unit instance")
        return Theorem3(units), "efo2"
    raise CliError(f"unknown auction {kind!r}")


def cmd_simulate(args) -> int:
    inst = _instance(args.instance)
    p, env = inst.profile, inst.environment
    if args.units is not None and isinstance(env, UnlimitedSupply) and args.auction in ("sigma-bspe", "dc651"):
        env = MultiUnit(args.units)
    auction, bench_name = _auction_for(args.auction, args, env)
    seed = resolve_seed(args.seed)
    try:
        est = harness.mc_revenue(auction, p, args.trials, seed, args.workers)
        efo = benchmarks.efo_fixed_price(p, env)
    except UnsupportedEnvironment as err:
        raise CliError(str(err)) from None
    units = args.units or (env.units if isinstance(env, MultiUnit) else p.n)
    values = {
        "f2": benchmarks.f2(p),
        "maxv": benchmarks.maxv(p),
        "efo": efo,
        "efo2": benchmarks.efo2_multiunit(p, max(units, 2)) if p.n >= 2 else 0,
    }
    bench = float(values[bench_name])
    ratio = bench / est.mean if est.mean > 0 else float("inf")
    header = ["auction", "trials", "seed", "mean_revenue", "stderr", "f2", "maxv", "efo", "efo2", "ratio_benchmark", "empirical_ratio"]
    row = [args.auction, est.trials, seed, est.mean, est.stderr, values["f2"], values["maxv"], values["efo"], values["efo2"], bench_name, ratio]
    _emit(_csv(header, [row]), args.out)
    return EXIT_OK


def cmd_online(args) -> int:
    inst = _instance(args.instance)
    seed = resolve_seed(args.seed)
    pricer = RspePricer(seed) if args.pricer == "rspe" else MaxPricer()
    if inst.profile.n < 2:
        raise CliError("online needs at least two bidders")
    est, bench, ratio = online_vs_benchmark(inst.profile, pricer, args.benchmark, args.trials, seed)
    header = ["pricer", "benchmark", "trials", "seed", "estimator", "mean_revenue", "stderr", "benchmark_value", "empirical_ratio"]
    row = [args.pricer, args.benchmark, est.trials, seed, est.estimator, est.mean, est.stderr, bench, ratio]
    _emit(_csv(header, [row]), args.out)
    return EXIT_OK


def cmd_verify(args) -> int:
    names = harness.SUITE_NAMES if args.suite == "all" else (args.suite,)
    seed = resolve_seed(args.seed)
    results = harness.run_suites(names, seed, args.trials, args.profiles, args.workers)
    rows = [r for res in results for r in res.rows]
    _emit(harness.rows_to_csv(rows), args.report)
    for res in results:
        status = "PASS" if res.passed else "FAIL"
        extra = "" if res.passed else f"  counterexample: {res.counterexample}"
        print(f"{res.name}: {status}{extra}", file=sys.stderr)
    return EXIT_OK if all(r.passed for r in results) else EXIT_FAILED


def cmd_paper_table(args) -> int:
    sigma, objective = analytics.optimize_sigma()
    limited = analytics.theorem3_ratio(LARGE_UNITS).value
    downward = analytics.theorem4_ratio(sigma).value
    online = analytics.ratio_online_f(LIMIT_N).value
    lam = analytics.lambda_ell(LIMIT_N).value
    rows = [
        ["limited_supply_ratio", f"l={LARGE_UNITS}", limited, PUBLISHED["limited_supply"], "lambda_l + (l-2)/l"],
        ["downward_closed_ratio", f"sigma={sigma:.6f}", downward, 6.51, f"1/objective + 2; objective={objective:.7f}"],
        ["online_f_ratio_limit", f"n={LIMIT_N}", online, PUBLISHED["online_f"], "lambda_n + tail_term(n)"],
        ["lambda_limit", f"l={LIMIT_N}", lam, PUBLISHED["lambda_limit"], "lambda_l for large l"],
        [
            "note",
            "headline",
            "",
            "",
            f"published headline ratios {PUBLISHED['limited_supply']} and {PUBLISHED['downward_closed']} "
            f"differ from the computed {limited:.4f} and {downward:.4f}",
        ],
    ]
    _emit(_csv(["quantity", "parameter", "computed", "stated", "note"], rows), args.out)
    return EXIT_OK


def cmd_sample(args) -> int:
    seed = resolve_seed(args.seed)
    rng = rng_for(seed, 0)
    if args.distribution == "equal-revenue":
        profile = analytics.sample_equal_revenue(args.n, rng)
    else:
        row = harness.generate_profiles(args.distribution, 1, args.n, seed, 0)[0]
        profile = BidProfile(tuple(float(x) for x in row))
    env = MultiUnit(args.units) if args.units else UnlimitedSupply()
    _emit(dump_instance(Instance(profile, env)), args.out)
    return EXIT_OK


# ---------------------------------------------------------------------------
# Parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="auction-lab",
        description="Prior-free auction benchmarks, competitive-ratio formulas and verification suites.",
        epilog=f"The seed defaults to {harness.DEFAULT_SEED}; ${SEED_ENV} overrides it and --seed overrides both.",
    )
    sub = parser.add_subparsers(dest="command", metavar="COMMAND", required=True)

    def add_seed(p):
        p.add_argument("--seed", type=int, default=None, help=f"master seed (default ${SEED_ENV} or {harness.DEFAULT_SEED})")

    def add_out(p, flag="--out"):
        p.add_argument(flag, default=None, help="write CSV here instead of standard output")

    p = sub.add_parser("bench", help="benchmark values for an instance file")
    p.add_argument("--instance", required=True)
    p.add_argument("--units", type=_positive, default=None, help="supply for the limited-supply benchmarks")
    add_out(p)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("ratios", help="lambda_l, the online_f ratio and its tail term for n = 2..N")
    p.add_argument("--max-n", type=int, required=True)
    p.add_argument("--exact", action="store_true", help="print exact rationals (N <= 64)")
    add_out(p)
    p.set_defaults(func=cmd_ratios)

    p = sub.add_parser("simulate", help="Monte Carlo revenue of an auction on an instance")
    p.add_argument("--auction", required=True, choices=["vickrey", "rspe", "limited-rspe", "sigma-bspe", "dc651", "theorem3"])
    p.add_argument("--instance", required=True)
    p.add_argument("--sigma", type=float, default=None)
    p.add_argument("--units", type=_positive, default=None)
    p.add_argument("--trials", type=_positive, default=10_000)
    p.add_argument("--workers", type=_positive, default=1)
    add_seed(p)
    add_out(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("online", help="online sampling auction under random arrival")
    p.add_argument("--instance", required=True)
    p.add_argument("--pricer", choices=["rspe", "max"], default="rspe")
    p.add_argument("--benchmark", choices=["f2", "maxv"], default="f2")
    p.add_argument("--trials", type=_positive, default=10_000)
    add_seed(p)
    add_out(p)
    p.set_defaults(func=cmd_online)

    p = sub.add_parser("verify", help="run property suites; exit 1 if any fails")
    p.add_argument("--suite", default="all", choices=("all",) + harness.SUITE_NAMES)
    p.add_argument("--trials", type=_positive, default=None, help="override every Monte Carlo sample size")
    p.add_argument("--profiles", type=_positive, default=harness.PROFILE_COUNT, help="uniform profiles per size")
    p.add_argument("--workers", type=_positive, default=1)
    add_seed(p)
    add_out(p, "--report")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("paper-table", help="headline ratios next to the published values")
    add_out(p)
    p.set_defaults(func=cmd_paper_table)

    p = sub.add_parser("sample", help="write a random instance file")
    p.add_argument("--n", type=_positive, required=True)
    p.add_argument("--distribution", choices=["equal-revenue"] + sorted(harness.GENERATORS), default="equal-revenue")
    p.add_argument("--units", type=_positive, default=None, help="write a multi_unit environment")
    add_seed(p)
    add_out(p)
    p.set_defaults(func=cmd_sample)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except CliError as err:
        print(f"auction-lab {args.command}: error: {err}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
