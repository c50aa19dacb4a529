import argparse
import sys
from pathlib import Path
from typing import List, Optional

from src.logging.setup import setup_logging
from src.models.enums import BenchScale

from loguru import logger

from src.cli.commands import (
    EXIT_ERROR,
    Overrides,
    cmd_bench,
    cmd_check,
    cmd_predict,
    cmd_sample,
)

COMMANDS = {
    "check": cmd_check,
    "sample": cmd_sample,
    "predict": cmd_predict,
    "bench": cmd_bench,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gibbs-kriging",
        description="Universal Kriging with the Gibbs reference posterior on correlation lengths.",
    )
    parser.add_argument("--log-level", default=None, help="DEBUG, INFO, WARNING, ERROR or CRITICAL")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--config", required=True, type=Path, help="INI config or a run manifest (.json)")
        p.add_argument("--seed", type=int, default=None, help="master seed overriding the config")
        p.add_argument("--data", type=Path, default=None, help="observations CSV: coordinates then response")
        p.add_argument("--output", type=Path, default=None, help="output directory")
        p.add_argument("--force", action="store_true", help="run even if existence is not guaranteed")

    def chain(p: argparse.ArgumentParser) -> None:
        p.add_argument("--iters", type=int, default=None, help="total Gibbs sweeps")
        p.add_argument("--burn-in", type=int, default=None)
        p.add_argument("--thin", type=int, default=None)

    check = sub.add_parser("check", help="existence checklist for the configured model")
    common(check)

    sample = sub.add_parser("sample", help="sample the Gibbs reference posterior")
    common(sample)
    chain(sample)

    predict = sub.add_parser("predict", help="prediction intervals at target points")
    common(predict)
    chain(predict)
    predict.add_argument("--targets", type=Path, default=None, help="targets CSV: coordinates only")
    predict.add_argument("--method", default=None, help="mle, map, fpd or fixed:θ1,θ2,...")
    predict.add_argument("--level", type=float, default=None, help="interval level in (0, 1)")

    bench = sub.add_parser("bench", help="coverage experiments from a preset")
    common(bench)
    bench.add_argument("--preset", default=None)
    bench.add_argument("--methods", default=None, help="comma-separated subset of true,mle,map,fpd")
    scale = bench.add_mutually_exclusive_group()
    scale.add_argument("--desk-scale", dest="scale", action="store_const", const=BenchScale.DESK)
    scale.add_argument("--full-scale", dest="scale", action="store_const", const=BenchScale.FULL)
    bench.add_argument("--threads", type=int, default=None, help="worker threads (default: all cores)")
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    setup_logging(args.log_level)
    known = Overrides.model_fields.keys()
    flags = Overrides(**{k: v for k, v in vars(args).items() if k in known and v is not None})
    logger.debug(f"Running '{args.command}' with {flags.model_dump(exclude_defaults=True)}")
    return COMMANDS[args.command](args.config, flags)


if __name__ == "__main__":
    try:
        sys.exit(main())
    except KeyboardInterrupt:
        logger.info("Execution interrupted by user (KeyboardInterrupt).")
        sys.exit(130)
    except Exception as e:
        logger.exception(f"Unhandled exception in main execution: {e}")
        sys.exit(EXIT_ERROR)
