import argparse
import logging
from pathlib import Path
from typing import Iterable, List, Sequence, Union

from pydantic import ValidationError
from sqlmodel import SQLModel

from app.components.emitters import Cell, emit, render_csv, render_json
from app.errors import SignSpecError
from app.models import OutputFormat, RunConfig, SignSpec, SignTail
from app.numerics import DEFAULT_SEED, DEFAULT_TOL, working_precision
from app.services.partition_service import Partition, PartitionService

logger = logging.getLogger(__name__)


def common_parser() -> argparse.ArgumentParser:
    """Flags shared by every subcommand."""
    parser = argparse.ArgumentParser(add_help=False)
    parser.add_argument(
        "--partition",
        default="luroth",
        help="luroth, dyadic, geometric:R, two-periodic:E:R, table:T1,T2,..:R, inline JSON or a JSON file",
    )
    parser.add_argument("--tol", type=float, default=DEFAULT_TOL, help="certified truncation tolerance")
    parser.add_argument("--seed", type=int, default=DEFAULT_SEED)
    parser.add_argument("--format", dest="output_format", choices=[f.value for f in OutputFormat], default="json")
    parser.add_argument("--output", default=None, help="output file (default: stdout)")
    parser.add_argument("--strict", action="store_true", help="exit with status 3 on an undetermined verdict")
    parser.add_argument("--verbose", action="store_true", help="debug logging on stderr")
    return parser


def add_eps(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--eps",
        default="all-zero",
        help="all-zero | all-one | prefix:BITS,tail:all-zero|all-one|period:BITS",
    )


def run_config(args: argparse.Namespace) -> RunConfig:
    return RunConfig(
        command=args.command,
        partition=args.partition,
        tol=args.tol,
        seed=args.seed,
        output_format=OutputFormat(args.output_format),
        output=args.output,
        strict=args.strict,
    )


def partition_precision(args: argparse.Namespace):
    """mpmath context at the precision the --partition config asks for."""
    config = PartitionService().parse_argument(args.partition)
    return working_precision(config.precision)


def load_partition(config: RunConfig) -> Partition:
    service = PartitionService()
    return service.make_partition(service.parse_argument(config.partition))


def parse_sign_spec(text: str) -> SignSpec:
    """--eps syntax: a tail alone, or comma-separated prefix:/tail:/period: parts."""
    prefix, tail, period = "", SignTail.ALL_ZERO, ""
    for part in text.strip().split(","):
        key, _, value = part.partition(":")
        match key:
            case "all-zero" | "all-one" if not value:
                tail = SignTail(key)
            case "prefix":
                prefix = value
            case "tail" if value in ("all-zero", "all-one"):
                tail = SignTail(value)
            case "tail" if value.startswith("period:"):
                tail, period = SignTail.PERIODIC, value.removeprefix("period:")
            case "period" if value:
                tail, period = SignTail.PERIODIC, value
            case _:
                raise SignSpecError(f"cannot read sign sequence '{text}' at '{part}'")
    try:
        return SignSpec(prefix=prefix, tail=tail, period=period)
    except ValidationError as e:
        logger.info(f"Rejected sign sequence {text!r}: {e}")
        raise SignSpecError(f"invalid sign sequence '{text}': {e.errors()[0]['msg']}") from e


def write(
    config: RunConfig,
    document: Union[SQLModel, Sequence[SQLModel]],
    header: List[str],
    rows: Iterable[Sequence[Cell]],
) -> None:
    """Emit the JSON document or the CSV table, whichever the run asked for."""
    match config.output_format:
        case OutputFormat.CSV:
            text = render_csv(header, rows)
        case _:
            text = render_json(document)
    emit(text, Path(config.output) if config.output else None)
