"""Command line entry point: ``alphawalk <subcommand> --config FILE``."""

import argparse
import sys

from .config import ConfigError, load
from .experiments import run, write_report

SUBCOMMANDS = {
    "simulate": "simulate",
    "curve": "discrepancy-curve",
    "fit": "fit-exponent",
    "moments": "moment-check",
    "diophsum": "dioph-sum",
    "condcheck": "cond-check",
    "etcheck": "et-check",
    "gapdiag": "gap-diagnostic",
}


def build_parser():
    parser = argparse.ArgumentParser(prog="alphawalk",
                                     description="Discrepancy experiments for {S_k alpha}.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, kind in SUBCOMMANDS.items():
        sp = sub.add_parser(name, help=f"run a {kind} experiment")
        sp.add_argument("--config", required=True, help="experiment config file")
        sp.add_argument("--seed", type=int, default=None, help="override the config seed (u64)")
        sp.add_argument("--out", default="out", help="output directory")
        sp.add_argument("--workers", type=int, default=None, help="worker processes")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        cfg = load(args.config)
        kw = {"kind": SUBCOMMANDS[args.command]}
        if args.seed is not None:
            kw["seed"] = args.seed
        if args.workers is not None:
            kw["workers"] = args.workers
        cfg = cfg.replace(**kw)
    except (OSError, ConfigError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    report = run(cfg)
    paths = write_report(report, args.out)
    for c in report.checks:
        print(f"{'PASS' if c.passed else 'FAIL'} {c.name}: {c.detail}")
    print(f"wrote {len(paths)} files to {args.out}")
    return 0 if report.ok else 1


if __name__ == "__main__":
    sys.exit(main())
