"""
The logger used in setnet is the plain loguru.logger, with the default level set to ERROR
on import so that library code stays quiet. Entry points activate logging with:

    >>> configure_logger(level="INFO")

Experiment runs add a file sink next to their outputs with add_file_sink. Do not call
configure_logger while such a sink is active, it replaces all handlers.
"""

from __future__ import annotations

import logging
import sys
from logging import getLevelName
from typing import Any, Union

from deprecated import deprecated
from loguru import logger as loguru_logger

from typedparser import VerboseQuietArgs

LevelType = Union[str, int]  # either "DEBUG" or 10
# file sinks: full date and the emitting function, for reading run.log after the fact
FILE_FORMAT = (
    "{time:YYYY-MM-DD HH:mm:ss.SSS} | {level: <8} | {name}:{function}:{line} - {message}"
)
SHORTEST_FORMAT = (
    "<green>{time:YYYYMMDD HH:mm:ss}</green> <level>{level: <4.4}</level> "
    "<level>{message}</level>"
)
LOG_LEVEL_NAMES = ["CRITICAL", "ERROR", "WARNING", "INFO", "DEBUG"]


def configure_logger(
    level: LevelType = "DEBUG",
    sink=sys.stderr,
    format=SHORTEST_FORMAT,  # noqa # pylint: disable=redefined-builtin
    colorize=True,
    **kwargs: Any,
) -> dict[str, Any]:
    """
    Replace all loguru handlers with a single one.

    Args:
        level: minimum level to log
        sink: where to write the logs to, a str sink is a file and never colorized
        format: message formatting
        colorize: add color codes to the output
        **kwargs: passed to logger.configure()

    Returns:
        Configuration passed to logger.configure()
    """
    handler = {
        "sink": sink,
        "format": format,
        "colorize": colorize and not isinstance(sink, str),
        "level": get_level_as_str(level),
    }
    logger_config = {"handlers": [handler], **kwargs}
    loguru_logger.configure(**logger_config)
    return logger_config


def add_file_sink(file: str, level: LevelType = "DEBUG") -> int:
    """Add a plain-text log file next to the current handlers. Returns the handler id."""
    return loguru_logger.add(
        file, level=get_level_as_str(level), format=FILE_FORMAT, colorize=False
    )


def get_level_as_str(level: LevelType) -> str:
    if isinstance(level, str):
        return level.upper()
    if isinstance(level, int):
        return getLevelName(level).upper()
    raise TypeError(f"Level must be str or int, not {type(level)}")


def get_logger_level_from_args(args: VerboseQuietArgs) -> str:
    if args.verbose:
        assert args.loglevel is None, "Cannot set both -v/--verbose and --log_level LEVEL"
        return "DEBUG"
    if args.quiet:
        assert args.loglevel is None, "Cannot set both -q/--quiet and --log_level LEVEL"
        return "WARNING"
    loglevel = args.loglevel
    if loglevel is not None:
        loglevel = loglevel.upper()
        assert loglevel in LOG_LEVEL_NAMES, f"{loglevel=} not in {LOG_LEVEL_NAMES=}"
        return loglevel
    return "INFO"


# the default loguru logger level is debug, but library code should be quiet.
configure_logger(level=logging.ERROR)
logger = loguru_logger
logger.warn = deprecated("Use logger.warning instead")(logger.warning)
