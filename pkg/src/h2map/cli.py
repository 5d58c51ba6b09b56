"""Command-line entry point.

Subcommands map one-to-one onto pipeline stages plus validate, report, run
and a fixture generator. Exit codes: 0 success, 2 validation failure,
3 stage failure.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .config import load_config, validate
from .errors import ConfigError, H2MapError, StageError
from .fixtures import build_demo_dataset
from .pipeline import run_pipeline, run_stage, stage_report, write_manifest

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_STAGE = 3

STAGE_COMMANDS = {
    "eligibility": ("eligibility", "placement"),
    "simulate": ("simulation",),
    "water": ("water",),
    "optimize": ("optimization",),
    "curves": ("curves",),
    "socio": ("socio",),
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="h2map",
        description="Regional green-hydrogen cost-potential pipeline",
    )
    parser.add_argument("--config", type=Path, help="run configuration (TOML)")
    parser.add_argument("--out", type=Path, help="output directory (default: <config dir>/out)")
    parser.add_argument("--year", type=int, choices=(2030, 2050), help="analysis year override")
    parser.add_argument("--water-scenario", choices=("conservative", "medium", "extreme"),
                        help="groundwater scenario override")
    parser.add_argument("--climate", choices=("rcp26", "rcp85"), help="climate pathway override")
    parser.add_argument("--threads", type=int, help="parallel region solves")
    parser.add_argument("--seed", type=int, default=0,
                        help="random seed (fixture generation only)")

    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("validate", help="check the configuration and input files")
    for name in STAGE_COMMANDS:
        sub.add_parser(name, help=f"run the {name} stage")
    sub.add_parser("report", help="collect rendered figures from the stage outputs")
    sub.add_parser("run", help="run the full pipeline and write the manifest")
    demo = sub.add_parser("make-fixture", help="generate the bundled 12-region demo dataset")
    demo.add_argument("target", type=Path, help="directory to create the dataset in")
    return parser


def _overrides(args) -> dict:
    overrides: dict = {}
    if args.year is not None:
        overrides.setdefault("run", {})["year"] = args.year
    if args.threads is not None:
        overrides.setdefault("run", {})["threads"] = args.threads
    if args.water_scenario is not None:
        overrides.setdefault("water", {})["scenario"] = args.water_scenario
    if args.climate is not None:
        overrides.setdefault("water", {})["climate"] = args.climate
    return overrides


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)

    if args.command == "make-fixture":
        config_path = build_demo_dataset(args.target, seed=args.seed)
        print(f"demo dataset written; config at {config_path}")
        return EXIT_OK

    if args.config is None:
        print("error: --config is required for this command", file=sys.stderr)
        return EXIT_VALIDATION
    try:
        cfg = load_config(args.config, output_dir=args.out, overrides=_overrides(args))
    except ConfigError as err:
        print(f"configuration error: {err}", file=sys.stderr)
        return EXIT_VALIDATION

    failures = validate(cfg)
    if args.command == "validate":
        if failures:
            print(f"{len(failures)} validation failure(s):")
            for failure in failures:
                print(f"  - {failure}")
            return EXIT_VALIDATION
        print("configuration valid")
        return EXIT_OK
    if failures:
        print("configuration invalid; run the validate subcommand for details",
              file=sys.stderr)
        for failure in failures:
            print(f"  - {failure}", file=sys.stderr)
        return EXIT_VALIDATION

    try:
        if args.command == "run":
            manifest = run_pipeline(cfg, args.config)
            print(f"pipeline complete; manifest at {manifest}")
        elif args.command == "report":
            stage_report(cfg)
            write_manifest(cfg, args.config)
            print(f"report written to {cfg.output_dir / 'report'}")
        else:
            for stage in STAGE_COMMANDS[args.command]:
                run_stage(cfg, stage)
                print(f"stage {stage} complete: {cfg.output_dir}")
            write_manifest(cfg, args.config)
    except StageError as err:
        print(f"error: {err} (partial outputs under failed/)", file=sys.stderr)
        return EXIT_STAGE
    except H2MapError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_STAGE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
