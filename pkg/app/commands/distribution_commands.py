import argparse
from fractions import Fraction
from typing import List

from app.commands.options import add_eps, load_partition, parse_sign_spec, run_config, write
from app.errors import DomainError
from app.numerics import parse_rational
from app.models import CdfPoint, GapValue
from app.services.distribution_service import DistributionService


def create(subparsers, parents) -> None:
    cdf = subparsers.add_parser("cdf", parents=parents, help="F_eps(z), optionally against a Monte Carlo orbit")
    add_eps(cdf)
    cdf.add_argument("--z", action="append", default=[], help="evaluation point in [0, 1], repeatable")
    cdf.add_argument("--grid", type=int, default=None, help="use z = k / (N + 1) for k = 1..N")
    cdf.add_argument("--empirical", type=int, default=None, metavar="N", help="orbit length for the empirical CDF")
    cdf.set_defaults(handler=handle_cdf)

    gvalues = subparsers.add_parser("gvalues", parents=parents, help="g(n) and the gap functional G(n)")
    gvalues.add_argument("-n", type=int, default=10, help="number of values G(0..n-1)")
    gvalues.set_defaults(handler=handle_gvalues)


def _z_values(args: argparse.Namespace) -> List[str]:
    try:
        values = [str(parse_rational(z)) for z in args.z]
    except (ValueError, ZeroDivisionError) as e:
        raise DomainError(f"cannot read --z value: {e}") from e
    if args.grid is not None:
        if args.grid < 1:
            raise DomainError(f"--grid must be at least 1, got {args.grid}")
        values += [str(Fraction(k, args.grid + 1)) for k in range(1, args.grid + 1)]
    if not values:
        raise DomainError("cdf needs --z or --grid")
    return values


def handle_cdf(args: argparse.Namespace) -> int:
    config = run_config(args)
    partition = load_partition(config)
    eps = parse_sign_spec(args.eps)
    service = DistributionService()
    z_values = _z_values(args)

    empirical = [None] * len(z_values)
    if args.empirical is not None:
        grid = [float(Fraction(z)) for z in z_values]
        empirical = service.empirical_cdf(partition, eps, grid, args.empirical, config.seed)

    points = [
        CdfPoint(z=float(Fraction(z)), analytic=service.cdf(partition, eps, z, config.tol), empirical=value)
        for z, value in zip(z_values, empirical)
    ]
    write(
        config,
        points,
        ["z", "F", "radius", "empirical"],
        ([p.z, p.analytic.value, p.analytic.radius, p.empirical] for p in points),
    )
    return 0


def handle_gvalues(args: argparse.Namespace) -> int:
    config = run_config(args)
    if args.n < 1:
        raise DomainError(f"-n must be at least 1, got {args.n}")
    partition = load_partition(config)
    service = DistributionService()
    values = []
    for n in range(args.n):
        gap = service.gap_enclosure(partition, n, config.tol)
        values.append(
            GapValue(n=n, g=float(service.g(partition, n)) if n else None, gap=gap.to_model(), sign=gap.sign())
        )
    write(
        config,
        values,
        ["n", "g", "G", "radius", "sign"],
        ([v.n, v.g, v.gap.value, v.gap.radius, v.sign.value] for v in values),
    )
    return 0
