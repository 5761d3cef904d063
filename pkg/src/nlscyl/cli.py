"""Command line entry point: ``nlscyl run <config>`` and ``nlscyl validate <config>``."""

from __future__ import annotations

import argparse
import json
import logging
import sys

from .config import parse_config
from .errors import ConfigurationError
from .experiments import PASS, run_experiment

EXIT_PASS, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="nlscyl", description="NLS on R^d x T: simulations and diagnostics")
    sub = ap.add_subparsers(dest="command", required=True)
    for name, help_ in (("run", "run one experiment"), ("validate", "parse and validate a config only")):
        sp = sub.add_parser(name, help=help_)
        sp.add_argument("config", help="path to the experiment config file")
        sp.add_argument("--out", default=None, help="output directory (overrides out_dir)")
        sp.add_argument("--seed", type=int, default=None, help="rng seed (overrides seed)")
    ap.add_argument("-v", "--verbose", action="store_true")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        spec = parse_config(args.config, overrides={"out_dir": args.out, "seed": args.seed})
    except ConfigurationError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if args.command == "validate":
        print(json.dumps(spec.resolved(), indent=2, sort_keys=True))
        return EXIT_PASS
    report = run_experiment(spec)
    for k, v in sorted(report.verdicts.items()):
        print(f"{k:28s} {v}")
    print(f"{'overall':28s} {report.overall}  ({spec.out_dir}/report.json)")
    return EXIT_PASS if report.overall == PASS else EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
