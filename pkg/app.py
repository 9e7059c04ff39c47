import argparse
import asyncio
import logging
import sys
from pathlib import Path
from typing import List, Optional

from pydantic import ValidationError

from handlers.command_handler import EXIT_USAGE, handle_command
from models.scenario import SCENARIO_NAMES
from models.schemas import RunConfig
from utils.logger import setup_logger

logger = logging.getLogger(__name__)


def get_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--scenario", choices=SCENARIO_NAMES, help="built-in scenario")
    common.add_argument("--observables", type=Path, help="JSON file with observables and grouping")
    common.add_argument("--format", choices=("json", "csv"), default="json")
    common.add_argument("--out", type=Path, help="output path (standard output when omitted)")

    parser = argparse.ArgumentParser(
        prog="mhqmo",
        description="Margenau-Hill quasi measurement operators and joint-measurability thresholds",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    build = sub.add_parser("build", parents=[common], help="emit the fuzzified family at one eta")
    build.add_argument("--eta", type=float, default=1.0)

    sub.add_parser("threshold", parents=[common], help="bisect the positivity threshold")

    scan = sub.add_parser("scan", parents=[common], help="minimum-eigenvalue curve over an eta grid")
    scan.add_argument("--min", dest="eta_min", type=float, default=0.0)
    scan.add_argument("--max", dest="eta_max", type=float, default=1.0)
    scan.add_argument("--steps", type=int, default=101)
    scan.add_argument("--per-element", action="store_true", help="add per-element eigenvalue columns")

    quasi = sub.add_parser("quasiprob", parents=[common], help="quasi-probability table for a state")
    quasi.add_argument("--state", type=Path, required=True, help="JSON density matrix")
    quasi.add_argument("--eta", type=float, default=1.0)

    verify = sub.add_parser("verify", help="run the self-check suite")
    verify.add_argument("--out", type=Path)
    return parser


def build_config(args: argparse.Namespace) -> RunConfig:
    fields = {k: v for k, v in vars(args).items() if v is not None}
    return RunConfig(**fields)


def main(argv: Optional[List[str]] = None) -> int:
    setup_logger()
    args = get_parser().parse_args(argv)
    try:
        config = build_config(args)
    except ValidationError as e:
        for error in e.errors():
            logger.error(f"Invalid arguments: {error['msg']}")
        return EXIT_USAGE
    logger.debug(f"Running {config.command} with {config.model_dump(exclude_none=True)}")
    return asyncio.run(handle_command(config))


if __name__ == "__main__":
    sys.exit(main())
