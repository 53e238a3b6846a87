"""``scatseries`` command line entry point.

Exit codes: 0 success, 1 a check failed or was inconclusive, 2 bad
configuration, 3 the computation itself was tainted, diverged or non-finite.
"""
from __future__ import annotations

import argparse
import json
import sys
from importlib import resources

from .errors import (ConfigError, DivergedError, InconclusiveError, NonFiniteError,
                     TaintedResultError)

EXIT_OK, EXIT_FAILED, EXIT_CONFIG, EXIT_NUMERICS = 0, 1, 2, 3


def _parser():
    ap = argparse.ArgumentParser(prog="scatseries", description="Scattering-operator experiments.")
    sub = ap.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run one experiment")
    run.add_argument("experiment")
    run.add_argument("--config", required=True)
    run.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
                     help="override a config entry, e.g. --set horizon.dt=0.005")
    run.add_argument("--output-dir")
    val = sub.add_parser("validate", help="check a config file and print its canonical form")
    val.add_argument("--config", required=True)
    val.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE")
    sub.add_parser("list", help="list experiments and shipped configs")
    return ap


def _list():
    from .harness import RECIPES

    print("experiments:")
    for name, (_, doc, modules) in RECIPES.items():
        print(f"  {name:22s} {doc} [{modules}]")
    print("shipped configs:")
    for entry in sorted(resources.files("scatseries.harness").joinpath("configs").iterdir(),
                        key=lambda e: e.name):
        if entry.name.endswith(".yaml"):
            print(f"  {entry}")
    return EXIT_OK


def main(argv=None):
    args = _parser().parse_args(argv)
    if args.command == "list":
        return _list()

    from .harness import load_config, run_experiment

    try:
        config = load_config(args.config, args.overrides)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if args.command == "validate":
        print(json.dumps(config.canonical(), indent=2, sort_keys=True))
        print(f"config ok (hash {config.digest()})", file=sys.stderr)
        return EXIT_OK

    try:
        outcome = run_experiment(args.experiment, config, args.output_dir)
    except KeyError as exc:
        print(f"error: {exc.args[0]}", file=sys.stderr)
        return EXIT_CONFIG
    except (TaintedResultError, DivergedError, NonFiniteError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICS
    except InconclusiveError as exc:
        print(f"inconclusive: {exc}", file=sys.stderr)
        return EXIT_FAILED
    for check, ok in outcome.checks.items():
        print(f"{'PASS' if ok else 'FAIL'}  {check}")
    return EXIT_OK if outcome.passed else EXIT_FAILED


if __name__ == "__main__":
    sys.exit(main())
