"""Command line: ``ccom run|compare|validate``.

Exit status is 0 when every goal check passes, 1 when any fails and 2 on a
configuration error.
"""
from __future__ import annotations

import argparse
import sys

from .churn import TraceError
from .config import ConfigInvalid, load_config, parse_seeds, validate
from .experiments import MismatchedSeeds, compare, run_suite

EXIT_OK, EXIT_GOAL, EXIT_CONFIG = 0, 1, 2


def _load(path: str, args) -> object:
    cfg = load_config(path)
    if args.mode:
        cfg = validate(cfg.with_overrides(mode=args.mode))
    return cfg


def _seeds(args):
    return parse_seeds(args.seeds) if args.seeds else None


def cmd_run(args) -> int:
    cfg = _load(args.config, args)
    results = run_suite(cfg, _seeds(args), args.out, log=print)
    failed = [r.seed for r in results if not r.passed]
    print(f"{len(results) - len(failed)}/{len(results)} runs passed; summary in "
          f"{args.out or cfg.output}/summary.csv")
    return EXIT_GOAL if failed else EXIT_OK


def cmd_compare(args) -> int:
    cfg_a = _load(args.config_a, args)
    cfg_b = _load(args.config_b, args)
    report = compare(cfg_a, cfg_b, _seeds(args), args.out, log=print)
    print(f"mean performance_pct={report['mean_pct']:.3f}")
    failed = [r for r in report["results_a"] + report["results_b"] if not r.passed]
    return EXIT_GOAL if failed else EXIT_OK


def cmd_validate(args) -> int:
    cfg = _load(args.config, args)
    print(f"ok: {cfg.protocol} n0={cfg.n0} alpha={cfg.alpha:g} seeds={len(cfg.seeds)}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="ccom", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--seeds", help='seed list, e.g. "0-19" or "1,5,9"')
        p.add_argument("--out", help="output directory (overrides the config)")
        p.add_argument("--mode", choices=("analytic", "concrete"), help="puzzle solving mode")

    p = sub.add_parser("run", help="run every seed of one config")
    p.add_argument("config")
    common(p)
    p.set_defaults(func=cmd_run)
    p = sub.add_parser("compare", help="run two configs on shared churn and seeds")
    p.add_argument("config_a")
    p.add_argument("config_b")
    common(p)
    p.set_defaults(func=cmd_compare)
    p = sub.add_parser("validate", help="check a config without running it")
    p.add_argument("config")
    common(p)
    p.set_defaults(func=cmd_validate)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigInvalid, MismatchedSeeds, TraceError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ValueError as exc:
        # parameter objects reject out-of-range values with a plain ValueError
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
