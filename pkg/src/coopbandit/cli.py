"""Command-line entry point: ``python -m coopbandit {run,compare,plot,selftest}``.

Exit codes: 0 success, 1 config error, 2 invariant violation, 3 I/O error.
"""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from .errors import ConfigError, InvariantViolation, ShapeMismatch

EXIT_OK, EXIT_CONFIG, EXIT_INVARIANT, EXIT_IO = 0, 1, 2, 3


def _load(args):
    from .harness import load_config
    if not args.config:
        raise ConfigError("--config is required")
    cfg = load_config(args.config)
    if args.seeds is not None or args.base_seed is not None:
        if args.seeds is not None and args.seeds < 1:
            raise ConfigError("--seeds must be positive", key="seeds")
        count = args.seeds if args.seeds is not None else len(cfg.seeds)
        base = args.base_seed if args.base_seed is not None else 0
        cfg.seeds = list(range(base, base + count))
    if args.lean:
        cfg.lean = True
    if args.out:
        cfg.output = args.out
    cfg.validate()
    return cfg


def _print_summary(summary, out):
    for algo, entry in summary["algos"].items():
        final = np.asarray(entry["final_regret"])
        ok = "ok" if entry["invariants_ok"] else "VIOLATED"
        print(f"{algo:>9}: seeds={len(final)} final R_T mean={final.mean():.1f}"
              f" median={np.median(final):.1f} invariants {ok}", file=out)


def cmd_run(args):
    from .harness import run
    cfg = _load(args)
    _, summary = run(cfg, workers=args.workers)
    _print_summary(summary, sys.stdout)
    print(f"wrote {os.path.join(cfg.output, 'results.csv')}")
    if not all(e["invariants_ok"] for e in summary["algos"].values()):
        return EXIT_INVARIANT
    return EXIT_OK


def cmd_compare(args):
    from .harness import compare
    cfg = _load(args)
    results, report = compare(cfg, workers=args.workers)
    for pair, stats in report["pairs"].items():
        a, b = pair.split("-", 1)
        rate = report["win_rate"][a][b]
        print(f"{a} vs {b}: median diff {stats['median_diff']:.1f}, "
              f"{a} lower in {rate:.0%} of seeds")
    if any(r.violations for r in results):
        return EXIT_INVARIANT
    return EXIT_OK


def cmd_plot(args):
    from .plotting import plot_csvs
    if not args.csv:
        raise ConfigError("plot needs at least one CSV path")
    out = args.out or "regret.svg"
    if os.path.isdir(out) or not out.endswith(".svg"):
        out = os.path.join(out, f"{args.metric}.svg")
    plot_csvs(args.csv, out, metric=args.metric)
    print(f"wrote {out}")
    return EXIT_OK


def selftest(trials=50, runs=5, seed=0, out=sys.stdout):
    """Invariant suites on synthetic leader trajectories and short runs.

    Returns the list of violations found.
    """
    from .cbarc import run_cbarc
    from .checks import check_log, check_snapshots, synthetic_trajectory
    from .env import BanditInstance

    rng = np.random.default_rng(seed)
    problems = []
    for _ in range(trials):
        K = int(rng.integers(2, 17))
        V = int(rng.integers(1, K + 1))
        snaps = synthetic_trajectory(K, V, rng)
        problems += [f"synthetic K={K} V={V}: {p}"
                     for p in check_snapshots(snaps, K)]
    print(f"synthetic trajectories: {trials} checked", file=out)
    for s in range(runs):
        K = int(rng.integers(2, 9))
        V = int(rng.integers(1, K + 1))
        inst = BanditInstance.bernoulli(rng.uniform(0.1, 0.9, K), V)
        log = run_cbarc(inst, None, 20000, seed=s)
        problems += [f"run seed={s}: {p}" for p in check_log(log)]
    print(f"short cbarc runs: {runs} checked", file=out)
    for p in problems:
        print("VIOLATION", p, file=out)
    print("selftest", "FAILED" if problems else "passed", file=out)
    return problems


def cmd_selftest(args):
    problems = selftest(seed=args.base_seed or 0)
    return EXIT_INVARIANT if problems else EXIT_OK


def build_parser():
    p = argparse.ArgumentParser(
        prog="coopbandit",
        description="Cooperative corrupted-bandit experiments.")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", metavar="PATH")
        sp.add_argument("--seeds", type=int, metavar="N")
        sp.add_argument("--base-seed", type=int, metavar="S")
        sp.add_argument("--out", metavar="DIR")
        sp.add_argument("--workers", type=int, default=1, metavar="W")
        sp.add_argument("--lean", action="store_true")

    sp = sub.add_parser("run", help="run seeded experiments")
    common(sp)
    sp.set_defaults(func=cmd_run)
    sp = sub.add_parser("compare", help="paired comparison of algorithms")
    common(sp)
    sp.set_defaults(func=cmd_compare)
    sp = sub.add_parser("plot", help="SVG regret curves from result CSVs")
    sp.add_argument("csv", nargs="*")
    sp.add_argument("--out", metavar="PATH")
    sp.add_argument("--metric", default="regret")
    sp.set_defaults(func=cmd_plot)
    sp = sub.add_parser("selftest", help="run the invariant suites")
    sp.add_argument("--base-seed", type=int, metavar="S")
    sp.set_defaults(func=cmd_selftest)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except InvariantViolation as e:
        print(f"invariant violation: {e}", file=sys.stderr)
        return EXIT_INVARIANT
    except ShapeMismatch as e:
        print(f"input error: {e}", file=sys.stderr)
        return EXIT_IO
    except OSError as e:
        print(f"I/O error: {e}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
