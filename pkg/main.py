#!/usr/bin/env python3
"""
Unitary design toolkit - Main entry point
Verifies exact and approximate unitary 2-designs, twirls channels, tracks
convergence of the approximate design and simulates fidelity estimation
"""

import argparse
import json
import logging
import sys
from typing import List, Optional

from command_handlers import CommandHandlers, RunConfig
from config import Config
from errors import DesignToolkitError
from utils import format_error_message

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_TOLERANCE = 1
EXIT_ERROR = 2

SUBCOMMANDS = ("design-check", "twirl", "converge", "fidelity", "sample-circuit")


def configure_logging(config: Config):
    """Log to the configured file and to stderr; reports own stdout"""
    logging.basicConfig(
        format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
        level=logging.getLevelNamesMapping().get(config.log_level, logging.INFO),
        handlers=[
            logging.FileHandler(config.log_file),
            logging.StreamHandler(sys.stderr)
        ],
        force=True,
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="design-toolkit",
        description="Exact and approximate unitary 2-designs: checks, twirls, convergence and fidelity estimation",
    )
    subparsers = parser.add_subparsers(dest="subcommand", required=True)

    for name in SUBCOMMANDS:
        sub = subparsers.add_parser(name)
        sub.add_argument("--n", type=int, help="number of qubits")
        sub.add_argument("--seed", type=int, default=0, help="root seed for every random stream")
        sub.add_argument("--shots", type=int, default=10000, help="fidelity experiments")
        sub.add_argument("--reps", dest="repetitions", type=int, default=10,
                         help="repetitions of the basic procedure")
        sub.add_argument("--trials", type=int, default=20, help="random operator triples for design-check")
        sub.add_argument("--samples", type=int, default=20000, help="sampled design unitaries for design-check")
        sub.add_argument("--trajectories", type=int, default=10000, help="trajectories for converge --traj")
        sub.add_argument("--channel", help="Kraus channel (.json) or sparse Pauli channel (.pauli/.txt)")
        sub.add_argument("--start", help="start label for converge, e.g. XI")
        sub.add_argument("--out", help="write the report here instead of stdout")
        sub.add_argument("--format", dest="output_format", choices=("json", "csv", "text"))
        sub.add_argument("--tolerance", type=float, help="override the command's pass tolerance")
        sub.add_argument("--confidence", dest="confidence_level", type=float, default=0.99,
                         help="confidence level for fidelity radii")
        mode = sub.add_mutually_exclusive_group()
        mode.add_argument("--exact", dest="design", action="store_const", const="exact")
        mode.add_argument("--approx", dest="design", action="store_const", const="approx")
        mode.add_argument("--traj", dest="design", action="store_const", const="traj")
        sub.set_defaults(design="exact")

    return parser


def parse_run_config(argv: Optional[List[str]] = None) -> RunConfig:
    args = build_parser().parse_args(argv)
    return RunConfig(**vars(args))


def run(argv: Optional[List[str]] = None, config: Optional[Config] = None) -> int:
    """Execute one command; returns the process exit status"""
    run_config = parse_run_config(argv)
    try:
        config = config or Config()
        config.validate_config()
        handlers = CommandHandlers(config)
        report = handlers.handle(run_config)
        text = report.render(run_config.output_format)
        if run_config.out:
            handlers.data_manager.write_text(text, run_config.out)
        else:
            sys.stdout.write(text)
    except (DesignToolkitError, ValueError, OSError, json.JSONDecodeError) as e:
        logger.error(f"{run_config.subcommand} failed: {e}")
        sys.stdout.write(json.dumps(format_error_message(e, run_config.subcommand), indent=2, sort_keys=True) + "\n")
        return EXIT_ERROR

    if not report.passed:
        for failure in report.failures:
            logger.warning(f"Tolerance failure: {failure}")
        return EXIT_TOLERANCE
    return EXIT_OK


def main():
    """Main function to run the toolkit"""
    config = Config()
    configure_logging(config)
    sys.exit(run(config=config))


if __name__ == "__main__":
    main()
