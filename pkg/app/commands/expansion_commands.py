import argparse
import logging

from app.commands.options import add_eps, load_partition, parse_sign_spec, run_config, write
from app.errors import DomainError
from app.models import ThetaReport
from app.services.distribution_service import DistributionService
from app.services.expansion_service import ExpansionService

logger = logging.getLogger(__name__)


def create(subparsers, parents) -> None:
    expand = subparsers.add_parser("expand", parents=parents, help="digits, signs and theta_n of one point")
    add_eps(expand)
    expand.add_argument("--x", required=True, help="point in [0, 1]; decimals and p/q are read exactly")
    expand.add_argument("--steps", type=int, default=20)
    expand.set_defaults(handler=handle_expand)

    theta = subparsers.add_parser("theta", parents=parents, help="theta_n along one seeded orbit")
    add_eps(theta)
    theta.add_argument("--n-iter", type=int, default=1000)
    theta.add_argument("--x0", type=float, default=None, help="starting point in (0, 1); random when absent")
    theta.set_defaults(handler=handle_theta)


def handle_expand(args: argparse.Namespace) -> int:
    config = run_config(args)
    partition = load_partition(config)
    service = ExpansionService()
    trace = service.expand(partition, parse_sign_spec(args.eps), args.x, args.steps)
    logger.debug(f"theta identity residual {service.theta_identity_check(trace, partition):.3e}")
    write(
        config,
        trace,
        ["n", "d", "s", "orbit", "q", "approx", "theta"],
        ([s.n, s.d, s.s, s.orbit, s.q, s.approx, s.theta] for s in trace.steps),
    )
    return 0


def handle_theta(args: argparse.Namespace) -> int:
    config = run_config(args)
    if args.n_iter < 1:
        raise DomainError(f"--n-iter must be at least 1, got {args.n_iter}")
    partition = load_partition(config)
    eps = parse_sign_spec(args.eps)
    distribution = DistributionService()
    thetas = distribution.expansion.orbit_thetas(partition, eps, args.n_iter, config.seed, args.x0)
    report = ThetaReport(
        eps=eps.label(),
        n_iter=args.n_iter,
        seed=config.seed,
        empirical_mean=float(thetas.mean()),
        mean=distribution.mean(partition, eps, config.tol),
        thetas=[float(theta) for theta in thetas],
    )
    write(config, report, ["n", "theta"], ([n, theta] for n, theta in enumerate(report.thetas, start=1)))
    return 0
