"""Command line entry point: ``bregcyclic run | validate | list-examples``."""
from __future__ import annotations

import argparse
import sys

from .scenario import ConfigError, load_config, run, shipped_scenarios

EXIT_OK, EXIT_RUN_FAILURE, EXIT_CONFIG_ERROR = 0, 1, 2


def _parser():
    ap = argparse.ArgumentParser(prog="bregcyclic", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="execute a scenario and write its report")
    r.add_argument("--config", required=True, help="scenario file, or the name of a shipped scenario")
    r.add_argument("--out", required=True, help="output directory")
    r.add_argument("--seed", type=int, default=None, help="override the scenario seed")
    r.add_argument("--format", choices=("json", "csv", "both"), default="both")
    v = sub.add_parser("validate", help="check a scenario file without running it")
    v.add_argument("--config", required=True)
    sub.add_parser("list-examples", help="list the shipped scenarios")
    return ap


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    if args.command == "list-examples":
        for name in shipped_scenarios():
            print(name)
        return EXIT_OK
    try:
        cfg = load_config(args.config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG_ERROR
    if args.command == "validate":
        print(f"{cfg.name}: ok ({len(cfg.runs)} runs, p = {cfg.p})")
        return EXIT_OK
    report = run(cfg, args.out, args.format, args.seed)
    for entry in report.runs:
        line = f"{entry['status']:7s} {entry['name']} ({entry['type']}): {entry['outcome']}"
        if "error" in entry:
            line += f" -- {entry['error']}"
        print(line)
    return EXIT_OK if report.passed else EXIT_RUN_FAILURE


if __name__ == "__main__":
    sys.exit(main())
