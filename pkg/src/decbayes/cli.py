"""Command-line entry point: ``decbayes run | check-config | gen-data``."""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

from .config import MODES, ConfigError, CsvData, parse_config
from .data import DataError, write_datasets_csv
from .engine import build_data
from .experiment import EXIT_CONFIG, EXIT_OK, ExperimentManifest, run_experiment
from .graph import GraphError

OUT_ENV = "DECBAYES_OUT"
DEFAULT_OUT = "results"

log = logging.getLogger("decbayes")


def _modes(text: str) -> list[str]:
    modes = [m.strip() for m in text.split(",") if m.strip()]
    bad = [m for m in modes if m not in MODES]
    if bad:
        raise argparse.ArgumentTypeError(f"unknown mode(s) {bad}; choose from {list(MODES)}")
    if not modes:
        raise argparse.ArgumentTypeError("at least one mode is required")
    return modes


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="decbayes", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run one or more modes and write result files")
    run.add_argument("config")
    run.add_argument("--out", help=f"output directory (env {OUT_ENV}, default {DEFAULT_OUT!r})")
    run.add_argument("--modes", type=_modes, help="comma-separated modes to compare")
    run.add_argument("--seed", type=int, help="override the master seed")

    check = sub.add_parser("check-config", help="validate a config and print it fully resolved")
    check.add_argument("config")

    gen = sub.add_parser("gen-data", help="write the agent datasets and test set as CSV")
    gen.add_argument("config")
    gen.add_argument("--out", required=True)
    gen.add_argument("--seed", type=int)
    return p


def _cmd_run(args) -> int:
    cfg = parse_config(args.config, {"seed": args.seed})
    out = args.out or os.environ.get(OUT_ENV) or DEFAULT_OUT
    manifest = ExperimentManifest.from_config(cfg, out, args.modes, args.config)
    outcome = run_experiment(manifest)
    for mode in manifest.modes:
        state = "ok" if mode in outcome.results else f"FAILED ({outcome.errors[mode]})"
        print(f"{mode}: {state}")
    print(f"wrote {len(outcome.files)} files to {manifest.out_dir}")
    return outcome.status


def _cmd_check(args) -> int:
    cfg = parse_config(args.config)
    print(json.dumps(cfg.resolved(), indent=2, sort_keys=True))
    return EXIT_OK


def _cmd_gen(args) -> int:
    cfg = parse_config(args.config, {"seed": args.seed})
    if isinstance(cfg.data, CsvData):
        raise ConfigError("gen-data needs data.source = synthetic")
    datasets, test, _ = build_data(cfg)
    write_datasets_csv(args.out, datasets, test)
    print(f"wrote {sum(len(d) for d in datasets)} training and {len(test)} test rows to {args.out}")
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    handler = {"run": _cmd_run, "check-config": _cmd_check, "gen-data": _cmd_gen}[args.command]
    try:
        return handler(args)
    except (ConfigError, DataError, GraphError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
