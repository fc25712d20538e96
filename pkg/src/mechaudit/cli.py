"""Command-line interface.

Subcommands::

    mechaudit run CONFIG [--seed N] [--workers N] [--out PATH] [--csv PATH]
                          [--budget-states N] [--mc-samples N] [--timing]
    mechaudit example NAME [--out PATH]
    mechaudit verify

Exit codes: 0 success, 1 configuration error, 2 verification failure,
3 I/O error.  ``MECHAUDIT_SEED`` provides a seed fallback when neither the
``--seed`` flag nor the config file sets one (the flag wins).
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from .config import parse_config
from .env import ConfigError
from .report import emit_report, run_scenario
from .scenarios import BUILTIN_NAMES, builtin_scenario

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_VERIFY = 2
EXIT_IO = 3


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mechaudit",
        description="Audit deterministic Bayesian mechanisms for empirical "
                    "(k, eps, delta) privacy and approximate truthfulness.")
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run the audits in a scenario config")
    run_p.add_argument("config", help="path to a scenario JSON file")
    run_p.add_argument("--seed", type=int, default=None,
                       help="override the scenario seed")
    run_p.add_argument("--workers", type=int, default=None,
                       help="parallel worker threads")
    run_p.add_argument("--out", default=None, help="write the JSON report here")
    run_p.add_argument("--csv", default=None,
                       help="also write CSV tables with this path stem")
    run_p.add_argument("--budget-states", type=int, default=None,
                       help="max exact-enumeration states per distribution")
    run_p.add_argument("--mc-samples", type=int, default=None,
                       help="Monte Carlo samples per distribution")
    run_p.add_argument("--timing", action="store_true",
                       help="include wall-clock metadata in the JSON report")

    ex_p = sub.add_parser("example", help="emit a built-in scenario config")
    ex_p.add_argument("name", help=f"one of: {', '.join(BUILTIN_NAMES)}")
    ex_p.add_argument("--out", default=None, help="write the config here")

    sub.add_parser("verify", help="run the acceptance suite")
    return parser


def _resolve_seed(flag_seed, config) -> int:
    if flag_seed is not None:
        return flag_seed
    if config.seed_explicit:
        return config.seed
    env_seed = os.environ.get("MECHAUDIT_SEED")
    if env_seed is not None:
        try:
            return int(env_seed)
        except ValueError:
            raise ConfigError(f"MECHAUDIT_SEED={env_seed!r} is not an integer") from None
    return config.seed


def _cmd_run(args) -> int:
    config = parse_config(args.config)
    config.data["seed"] = _resolve_seed(args.seed, config)
    if args.workers is not None:
        if args.workers < 1:
            raise ConfigError("--workers must be at least 1")
        config.data["workers"] = args.workers
    if args.budget_states is not None:
        config.data["budgets"]["enumeration_states"] = args.budget_states
    if args.mc_samples is not None:
        config.data["budgets"]["mc_samples"] = args.mc_samples

    doc = run_scenario(config)
    if args.out:
        emit_report(doc, "json", args.out, include_meta=args.timing)
    else:
        sys.stdout.write(doc.to_json(include_meta=args.timing))
    if args.csv:
        emit_report(doc, "csv", args.csv)
    return EXIT_OK


def _cmd_example(args) -> int:
    config = builtin_scenario(args.name)
    text = json.dumps(config, sort_keys=True, indent=2) + "\n"
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def _cmd_verify(_args) -> int:
    from .acceptance import run_all

    results = run_all(printer=print)
    return EXIT_OK if all(r.passed for r in results) else EXIT_VERIFY


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "run":
            return _cmd_run(args)
        if args.command == "example":
            return _cmd_example(args)
        return _cmd_verify(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
