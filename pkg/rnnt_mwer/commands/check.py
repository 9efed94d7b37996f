"""Gradient check command."""

import argparse

from rnnt_mwer.core.config import Settings
from rnnt_mwer.models.reports import GradcheckReport
from rnnt_mwer.services.gradcheck import run_gradcheck


def gradcheck_command(args: argparse.Namespace, settings: Settings) -> GradcheckReport:
    return run_gradcheck(seed=settings.seed, quick=args.quick)


def register(subparsers: argparse._SubParsersAction) -> None:
    p = subparsers.add_parser("gradcheck", help="Run the finite-difference gradient suites")
    p.add_argument("--quick", action="store_true", help="Fewer instances per suite")
    p.set_defaults(handler=gradcheck_command)
