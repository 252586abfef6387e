"""
Command-line front end.

    mtextremal <command> [--config cfg.json] [--out dir] [--seed N]
               [--tol name=value ...] [--format csv|json|plot] [--log-level LEVEL]

Exit codes: 0 when every asserted check passes, 1 when a check fails, 2 on
usage errors, 3 when results cannot be written.
"""

import argparse
import sys
from pathlib import Path
from typing import Dict, List, Optional

from pydantic import ValidationError

from . import __version__
from .config.experiment_config import COMMANDS, TOLERANCE_DEFAULTS, ExperimentConfig, RunnerSettings
from .core.experiments import UsageError, gather, run
from .core.run_record import ReportError, RunRecord, emit_report
from .utils.logging_setup import get_logger, setup_logging

EXIT_PASS = 0
EXIT_FAIL = 1
EXIT_USAGE = 2
EXIT_IO = 3


class _Parser(argparse.ArgumentParser):
    """Argument parser that raises instead of exiting."""

    def error(self, message: str):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="mtextremal",
                     description="Compute and verify singular Moser-Trudinger extremal objects.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("command", help=f"one of: {', '.join(COMMANDS)}")
    parser.add_argument("--config", type=Path, help="experiment configuration (JSON)")
    parser.add_argument("--out", type=Path, help="output directory")
    parser.add_argument("--seed", type=int, help="seed of the randomized suites")
    parser.add_argument("--tol", action="append", default=[], metavar="NAME=VALUE",
                        help=f"tolerance override; names: {', '.join(TOLERANCE_DEFAULTS)}")
    parser.add_argument("--format", choices=("csv", "json", "plot"), help="report format")
    parser.add_argument("--log-level", help="log level (DEBUG, INFO, WARNING, ERROR)")
    return parser


def parse_tolerances(items: List[str]) -> Dict[str, float]:
    """
    Parse repeated ``name=value`` overrides.

    Raises:
        UsageError: If an item is malformed, names an unknown tolerance or is not positive.
    """
    overrides = {}
    for item in items:
        name, sep, raw = item.partition("=")
        name = name.strip()
        if not sep:
            raise UsageError(f"--tol expects name=value, got '{item}'")
        if name not in TOLERANCE_DEFAULTS:
            raise UsageError(f"Unknown tolerance '{name}'")
        try:
            value = float(raw)
        except ValueError:
            raise UsageError(f"Tolerance '{name}' is not a number: '{raw}'")
        if not value > 0:
            raise UsageError(f"Tolerance '{name}' must be positive")
        overrides[name] = value
    return overrides


def load_config(args: argparse.Namespace, settings: RunnerSettings) -> ExperimentConfig:
    """Merge the config file, runner defaults and command-line flags."""
    if args.command not in COMMANDS:
        raise UsageError(f"Unknown command '{args.command}'")
    try:
        config = ExperimentConfig.from_file(args.config) if args.config else ExperimentConfig(
            out=settings.output.directory, format=settings.output.format)
    except ValidationError as e:
        raise UsageError(f"Invalid configuration: {e}")

    update = {"command": args.command}
    if args.out is not None:
        update["out"] = str(args.out)
    if args.seed is not None:
        update["seed"] = args.seed
    if args.format is not None:
        update["format"] = args.format
    tolerances = dict(config.tolerances)
    tolerances.update(parse_tolerances(args.tol))
    update["tolerances"] = tolerances
    try:
        return ExperimentConfig.model_validate({**config.model_dump(), **update})
    except ValidationError as e:
        raise UsageError(f"Invalid option: {e}")


def print_failures(records: List[RunRecord]) -> None:
    for record in records:
        for row in record.failing:
            print(f"FAIL {record.command} {row.check} [{row.param}] lhs={row.lhs:.12g} "
                  f"rhs={row.rhs:.12g} residual={row.residual:.3e} tol={row.tol:.3e}")


def main(argv: Optional[List[str]] = None) -> int:
    """
    Run the command line.

    Args:
        argv: Arguments without the program name; sys.argv[1:] when None.

    Returns:
        int: Exit code.
    """
    try:
        args = build_parser().parse_args(argv)
        settings = RunnerSettings()
        setup_logging(log_level=args.log_level or settings.logging.level,
                      log_file=settings.log_path(),
                      console_output=settings.logging.console)
        config = load_config(args, settings)
    except UsageError as e:
        print(f"usage error: {e}", file=sys.stderr)
        return EXIT_USAGE

    logger = get_logger(__name__)
    out_dir = Path(config.out)
    try:
        if config.command == "report":
            records = gather(out_dir)
        else:
            records = [run(config.command, config, out_dir)]
        emit_report(records, config.format, out_dir)
    except UsageError as e:
        print(f"usage error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (OSError, ReportError) as e:
        logger.error(f"Could not write results to {out_dir}: {e}")
        print(f"io error: {e}", file=sys.stderr)
        return EXIT_IO

    if all(record.passed for record in records):
        print(f"{config.command}: pass ({sum(len(r.rows) for r in records)} checks)")
        return EXIT_PASS
    print_failures(records)
    return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
