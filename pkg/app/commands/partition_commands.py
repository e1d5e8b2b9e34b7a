import argparse
from fractions import Fraction

from app.commands.options import load_partition, run_config, write
from app.models import PartitionPoint, PartitionReport
from app.services.partition_service import PartitionService


def create(subparsers, parents) -> None:
    parser = subparsers.add_parser("partition", parents=parents, help="partition points and ratio tail bounds")
    parser.add_argument("-n", type=int, default=10, help="number of points t_1..t_n")
    parser.add_argument("--k", type=int, default=0, help="index after which rho_n is bounded")
    parser.set_defaults(handler=handle)


def handle(args: argparse.Namespace) -> int:
    config = run_config(args)
    partition = load_partition(config)
    points = [
        PartitionPoint(
            n=n,
            t=float(partition.t(n)),
            a=float(partition.a(n)),
            rho=float(partition.rho(n)),
            exact_t=str(partition.t(n)) if isinstance(partition.t(n), Fraction) else None,
        )
        for n in range(1, args.n + 1)
    ]
    tail = PartitionService().tail_stats(partition, args.k, max(1000, args.k + 1))
    report = PartitionReport(config=partition.describe(), points=points, tail=tail)
    write(
        config,
        report,
        ["n", "t", "a", "rho", "exact_t"],
        ([p.n, p.t, p.a, p.rho, p.exact_t] for p in points),
    )
    return 0
