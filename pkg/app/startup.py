import logging
import sys


def startup(verbose: bool = False) -> None:
    # called once per process, before any subcommand runs
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.INFO,
        format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
        stream=sys.stderr,
        force=True,
    )
