import argparse
import logging
import sys
from typing import List, Optional

from pydantic import ValidationError

import app.commands.distribution_commands
import app.commands.expansion_commands
import app.commands.mset_commands
import app.commands.partition_commands
from app.commands.options import common_parser, partition_precision
from app.errors import ConfigError, DomainError, PartitionError, SignSpecError, TruncationError, VerdictError
from app.startup import startup

logger = logging.getLogger(__name__)

USAGE_EXIT = 2

RECOVERABLE_ERRORS = (
    ConfigError,
    PartitionError,
    SignSpecError,
    DomainError,
    TruncationError,
    VerdictError,
    ValidationError,
)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="luroth-approx",
        description="Approximation coefficients of generalised alpha-Lueroth expansions and the set of their means.",
    )
    subparsers = parser.add_subparsers(dest="command", required=True)
    parents = [common_parser()]

    # Register subcommand modules
    app.commands.partition_commands.create(subparsers, parents)
    app.commands.expansion_commands.create(subparsers, parents)
    app.commands.distribution_commands.create(subparsers, parents)
    app.commands.mset_commands.create(subparsers, parents)
    return parser


def run(argv: Optional[List[str]] = None) -> int:
    """Parse argv, run the subcommand and map failures to exit codes."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        logger.debug(f"Argument parsing ended with {e.code}")
        return e.code if isinstance(e.code, int) else USAGE_EXIT

    startup(verbose=args.verbose)
    try:
        with partition_precision(args):
            return args.handler(args)
    except RECOVERABLE_ERRORS as e:
        logger.error(f"{args.command} failed: {e}")
        return USAGE_EXIT


if __name__ == "__main__":
    sys.exit(run(sys.argv[1:]))
