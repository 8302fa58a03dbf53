"""
Command-line front end.

    fringeforge <command> --config PATH [--seed N] [--out DIR] [--freq high|low] [--verbose]

Exit status 0 on success. A FringeForgeError exits with its own status and
one JSON line on stderr; a bad command line is a UsageError (status 2)
reported the same way; anything else exits 1 as InternalError.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from typing import List, Optional

from controllers.pipeline_controller import COMMANDS, PipelineController
from services.serialization.json_io import dumps
from utils.errors import FringeForgeError, UsageError

logger = logging.getLogger(__name__)


class _ArgumentParser(argparse.ArgumentParser):
    """Usage errors raise UsageError instead of printing and exiting."""

    def error(self, message: str):
        raise UsageError(f"{self.prog}: {message}")


def build_parser() -> argparse.ArgumentParser:
    parser = _ArgumentParser(
        prog="fringeforge",
        description="Cylindrical fringe-projection profilometry pipeline.",
    )
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", required=True, help="pipeline configuration (JSON)")
    parser.add_argument("--seed", type=int, default=None, help="override the config seed")
    parser.add_argument("--out", default=None, help="override the config output_dir")
    parser.add_argument("--freq", choices=("high", "low"), default=None,
                        help="wrap only this frequency (default: both)")
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    return parser


def _report_error(payload: dict) -> None:
    print(json.dumps(payload, sort_keys=True), file=sys.stderr)


def main(argv: Optional[List[str]] = None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except UsageError as e:
        logger.error("%s", e)
        _report_error(e.to_dict())
        return e.exit_status
    if args.verbose:
        logging.getLogger().setLevel(logging.DEBUG)

    try:
        controller = PipelineController.from_config_file(args.config, seed=args.seed, output_dir=args.out)
        summary = controller.run(args.command, freq=args.freq)
    except FringeForgeError as e:
        logger.error("%s failed: %s", args.command, e)
        _report_error(e.to_dict())
        return e.exit_status
    except Exception as e:
        logger.exception("%s failed unexpectedly", args.command)
        _report_error({"error": "InternalError", "code": "internal_error", "message": str(e)})
        return 1

    sys.stdout.write(dumps(summary))
    return 0
