"""resonance-lab command line.

    resonance-lab <subcommand> --config <path> [--h ...] [--band lo,hi] [--out <dir>]

Subcommands: states, sweep, interlace, lemmas, figure1, plot.
Exit codes: 0 success, 2 validation error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import sys
from typing import Any

import orjson

from app.core.config import get_settings
from app.core.errors import ResonanceLabError, get_exit_code
from app.core.logging import get_logger, setup_logging
from app.domain.models.phase import PhaseEngine
from app.domain.models.potential import BUILTIN_POTENTIALS
from app.services.batch_service import COMMANDS, BatchService
from app.services.config_loader import parse_config

logger = get_logger("resonance_lab.cli")

HELP = {
    "states": "Locate states of every kind for each h",
    "sweep": "h-sweep with pairing and exponential gap fit",
    "interlace": "Check that antibound states separate consecutive bound states",
    "lemmas": "Run the Wronskian, growth, cone and dtheta/dk checks",
    "figure1": "Sweep the two built-in even spline potentials and plot them",
    "plot": "Render a states.csv as scatter.svg",
}


def _band(text: str) -> tuple[float, float]:
    try:
        lo, hi = (float(part) for part in text.split(","))
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"band must look like lo,hi: {text!r}") from exc
    return lo, hi


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="resonance-lab",
        description="Neumann eigenvalues, bound and antibound states by Prufer shooting",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        cmd = sub.add_parser(name, help=HELP[name])
        cmd.add_argument("--config", help="JSON run configuration")
        cmd.add_argument("--h", nargs="+", type=float, help="h values (override)")
        cmd.add_argument("--band", type=_band, help="k band as lo,hi (override)")
        cmd.add_argument("--out", dest="out_dir", help="Output directory (override)")
        cmd.add_argument("--builtin", choices=sorted(BUILTIN_POTENTIALS), help="Built-in potential")
        cmd.add_argument("--engine", choices=[e.value for e in PhaseEngine])
        if name == "plot":
            cmd.add_argument("--input", dest="input_csv", help="states.csv to plot")
    return parser


def _overrides(args: argparse.Namespace) -> dict[str, Any]:
    keys = ("h", "band", "out_dir", "builtin", "engine", "input_csv")
    return {key: getattr(args, key, None) for key in keys}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    settings = get_settings()
    setup_logging(settings)

    try:
        config = parse_config(args.config, _overrides(args))
        summary = BatchService(settings, config).run(args.command)
    except ResonanceLabError as exc:
        code = get_exit_code(exc)
        logger.error(
            "command_failed",
            command=args.command,
            error_type=type(exc).__name__,
            error=exc.message,
            details=exc.details,
            exit_code=code,
        )
        return code

    sys.stdout.write(orjson.dumps(summary, option=orjson.OPT_INDENT_2).decode() + "\n")
    return 0


if __name__ == "__main__":
    sys.exit(main())
