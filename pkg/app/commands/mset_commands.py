import argparse
import logging

from app.commands.options import load_partition, run_config, write
from app.models import Verdict
from app.services.mset_service import MSetService

logger = logging.getLogger(__name__)

UNDETERMINED_EXIT = 3


def create(subparsers, parents) -> None:
    mset = subparsers.add_parser("mset", parents=parents, help="depth-k interval tree of the M-set and its union")
    mset.add_argument("--depth", type=int, default=3)
    mset.set_defaults(handler=handle_mset)

    classify = subparsers.add_parser("classify", parents=parents, help="finite union or Cantor verdict with evidence")
    classify.add_argument("--probe-depth", type=int, default=8)
    classify.set_defaults(handler=handle_classify)

    dim = subparsers.add_parser("dim", parents=parents, help="Hausdorff and packing approximants of a Cantor M-set")
    dim.add_argument("--kmax", type=int, default=30)
    dim.set_defaults(handler=handle_dim)

    attain = subparsers.add_parser("attain", parents=parents, help="a sign word whose interval holds a given M value")
    attain.add_argument("--target", required=True, help="M value; decimals and p/q are read exactly")
    attain.add_argument("--depth", type=int, default=10)
    attain.set_defaults(handler=handle_attain)


def _exit_code(verdict: Verdict, strict: bool) -> int:
    if strict and verdict == Verdict.UNDETERMINED:
        logger.warning("Verdict is undetermined and --strict was given")
        return UNDETERMINED_EXIT
    return 0


def handle_mset(args: argparse.Namespace) -> int:
    config = run_config(args)
    partition = load_partition(config)
    approx = MSetService().mset_approx(partition, args.depth, config.tol)
    write(
        config,
        approx,
        ["lo", "hi", "radius", "members"],
        ([m.lo, m.hi, m.radius, m.members] for m in approx.merged),
    )
    return _exit_code(approx.classification.verdict, config.strict)


def handle_classify(args: argparse.Namespace) -> int:
    config = run_config(args)
    partition = load_partition(config)
    classification = MSetService().classify(partition, args.probe_depth, config.tol)
    write(
        config,
        classification,
        ["name", "status", "from_index", "sign", "detail"],
        (
            [c.name, c.status.value, c.from_index, c.sign.value if c.sign else None, c.detail]
            for c in classification.conditions
        ),
    )
    return _exit_code(classification.verdict, config.strict)


def handle_dim(args: argparse.Namespace) -> int:
    config = run_config(args)
    partition = load_partition(config)
    report = MSetService().dimensions(partition, args.kmax, config.tol)
    write(
        config,
        report,
        ["k", "I", "radius", "hausdorff", "packing", "raw", "hausdorff_inf", "packing_sup"],
        (
            [
                r.k,
                r.interval_length.value,
                r.interval_length.radius,
                r.hausdorff,
                r.packing,
                r.raw,
                r.hausdorff_inf,
                r.packing_sup,
            ]
            for r in report.rows
        ),
    )
    return 0


def handle_attain(args: argparse.Namespace) -> int:
    config = run_config(args)
    partition = load_partition(config)
    result = MSetService().attain(partition, args.target, args.depth, config.tol)
    write(
        config,
        result,
        ["target", "word", "lo", "hi", "branching_levels"],
        [
            [
                result.target,
                result.word,
                result.interval.lo.value,
                result.interval.hi.value,
                " ".join(str(level) for level in result.branching_levels),
            ]
        ],
    )
    return 0
