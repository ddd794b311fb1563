"""Command-line entry point.

Exit codes: 0 success, 1 a check or study failed (or the beta recursion
did not stabilize), 2 invalid input or configuration, 3 the solver did
not converge.
"""
import argparse
import logging
import sys
from pathlib import Path

from pydantic import ValidationError

from app.commands import experiments, theory
from app.core.config import settings
from app.core.errors import NotConvergedError, NotStabilizedError

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_INVALID = 2
EXIT_NOT_CONVERGED = 3


def configure_logging(verbose: bool = False) -> None:
    """Log to ``settings.log_dir/latest.log``; DEBUG with --verbose or debug settings."""
    log_dir = settings.log_dir
    log_dir.mkdir(parents=True, exist_ok=True)
    logging.basicConfig(
        level=logging.DEBUG if (verbose or settings.debug) else logging.INFO,
        format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
        filename=str(log_dir / "latest.log"),
        force=True,
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ortholip",
        description="Exponent schedules, regularized solves and a priori estimate checks "
                    "for orthotropic functionals with nonstandard growth",
    )
    parser.add_argument("--config", type=Path, default=None, help="experiment file (INI)")
    parser.add_argument("--out", type=Path, default=None, help="output directory")
    parser.add_argument("--emit-plot-data", action="store_true", help="write (h, constant) per study")
    parser.add_argument("--seed", type=int, default=None, help="override the data seed")
    parser.add_argument("--threads", type=int, default=None, help="workers for concurrent solves")
    parser.add_argument("--archive", action="store_true", help="store reports in the SQLite archive")
    parser.add_argument("--verbose", action="store_true")

    sub = parser.add_subparsers(dest="command", required=True)
    theory.register(sub)
    experiments.register(sub)
    return parser


def _fail(message: str, code: int) -> int:
    logger.error(message)
    print(f"error: {message}", file=sys.stderr)
    return code


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    configure_logging(args.verbose)
    logger.info(f"{settings.app_name}: {args.command}")
    try:
        code = theory.handle(args)
        if code is None:
            code = experiments.handle(args)
    except NotConvergedError as e:
        return _fail(str(e), EXIT_NOT_CONVERGED)
    except NotStabilizedError as e:
        return _fail(str(e), EXIT_CHECK_FAILED)
    except (ValidationError, ValueError) as e:
        return _fail(str(e), EXIT_INVALID)
    return EXIT_OK if code is None else code


if __name__ == "__main__":
    sys.exit(main())
