"""
Command-line front-end for the experiment pipeline.
"""


import argparse
import sys
from typing import Callable, Dict, List, Optional

from loguru import logger

from ..models.serialization import ModelFileError
from ..models.training import TrainingDataError
from .commands import (
    ExitCode,
    cmd_attack,
    cmd_evaluate,
    cmd_select,
    cmd_synth,
    cmd_train,
)
from .config import ConfigError, RunConfig, load_config
from .corpus import CorpusError

_COMMANDS: Dict[str, Callable[[RunConfig], ExitCode]] = {
    "synth": cmd_synth,
    "train": cmd_train,
    "attack": cmd_attack,
    "select": cmd_select,
    "evaluate": cmd_evaluate,
}

_HELP = {
    "synth": "Generate the procedural Real/Fake corpus.",
    "train": "Train the surrogate and target detectors.",
    "attack": "Produce both adversarial candidates for every fake image.",
    "select": "Pick the better candidate using the held-out targets.",
    "evaluate": "Write the per-image report and summary.",
}

_LOG_LEVELS = ["TRACE", "DEBUG", "INFO", "SUCCESS", "WARNING", "ERROR"]


def _make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="transfer_attack",
        description="Dual-stream transfer attacks on fake-image detectors.",
    )
    subparsers = parser.add_subparsers(dest="command", required=True)
    for name in _COMMANDS:
        command = subparsers.add_parser(name, help=_HELP[name])
        command.add_argument(
            "--config", help="JSON run configuration. Defaults if omitted."
        )
        command.add_argument("--seed", type=int, help="Override the seed.")
        command.add_argument(
            "--workers", type=int, help="Override the worker count."
        )
        command.add_argument(
            "--log-level",
            default="INFO",
            choices=_LOG_LEVELS,
            help="Minimum level logged to standard error.",
        )
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    """
    Runs one pipeline stage.

    Args:
        argv: The arguments, without the program name. Read from the command
            line if not provided.

    Returns:
        The exit status.

    """
    args = _make_parser().parse_args(argv)

    logger.remove()
    logger.add(sys.stderr, level=args.log_level)

    try:
        config = load_config(
            args.config, seed=args.seed, workers=args.workers
        )
        return int(_COMMANDS[args.command](config))
    except (
        ConfigError,
        CorpusError,
        ModelFileError,
        TrainingDataError,
        OSError,
    ) as error:
        logger.error("{} failed: {}", args.command, error)
        return int(ExitCode.FATAL)
