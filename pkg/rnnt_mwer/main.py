"""Command-line entry point."""

import argparse
import logging
import sys
from pathlib import Path
from typing import Any

from rnnt_mwer.commands import check, data, decode, train
from rnnt_mwer.core.config import load_settings
from rnnt_mwer.core.errors import NumericError, RnntMwerError

# Configure logging
logging.basicConfig(
    level=logging.INFO,
    format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
)
logger = logging.getLogger(__name__)

USAGE_EXIT = 1
# --seed fans out to every seeded component
SEEDED_FIELDS = ("seed", "model.init_seed", "rnnt.seed", "mwer.seed")


class UsageErrorParser(argparse.ArgumentParser):
    """ArgumentParser that exits with the usage code instead of argparse's 2."""

    def error(self, message: str) -> None:  # type: ignore[override]
        self.print_usage(sys.stderr)
        self.exit(USAGE_EXIT, f"{self.prog}: error: {message}\n")


def create_parser() -> argparse.ArgumentParser:
    """Create the parser with every sub-command registered."""
    parser = UsageErrorParser(
        prog="rnnt-mwer",
        description="RNN-T training, decoding and MWER fine-tuning toolkit",
    )
    parser.add_argument("--seed", type=int, help="Seed for data generation, init and training")
    parser.add_argument("--config", type=Path, help="JSON settings file")
    parser.add_argument("--json-out", type=Path, help="Also write the report as JSON")
    parser.add_argument("--log-level", dest="log_level", help="DEBUG, INFO, WARNING or ERROR")

    # Register commands
    subparsers = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")
    data.register(subparsers)
    train.register(subparsers)
    decode.register(subparsers)
    check.register(subparsers)
    return parser


def collect_overrides(args: argparse.Namespace) -> dict[str, Any]:
    """Dotted settings paths set on the command line."""
    overrides = {k: v for k, v in vars(args).items() if "." in k and v is not None}
    if args.seed is not None:
        overrides.update({field: args.seed for field in SEEDED_FIELDS})
    if args.log_level is not None:
        overrides["log_level"] = args.log_level
    return overrides


def main(argv: list[str] | None = None) -> int:
    args = create_parser().parse_args(argv)
    try:
        settings = load_settings(args.config, **collect_overrides(args))
        logging.getLogger().setLevel(settings.log_level)
        logger.debug(f"Running {args.command} with seed {settings.seed}")
        report = args.handler(args, settings)
    except RnntMwerError as e:
        logger.error(f"{args.command} failed: {e}")
        return e.exit_code

    print(report.table())
    if args.json_out is not None:
        args.json_out.parent.mkdir(parents=True, exist_ok=True)
        args.json_out.write_text(report.model_dump_json(indent=2) + "\n", encoding="utf-8")
    if not getattr(report, "passed", True):
        logger.error(f"{args.command}: checks failed")
        return NumericError.exit_code
    return 0


if __name__ == "__main__":
    sys.exit(main())
