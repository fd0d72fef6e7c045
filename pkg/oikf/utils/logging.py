"""Logging utilities using loguru.

Library modules log through ``from loguru import logger``. The filter hot path (per time
step) never logs; runs, sweeps, and exports do.
"""

import sys
import warnings
from pathlib import Path
from typing import TYPE_CHECKING, TextIO

from loguru import logger

if TYPE_CHECKING:
    from loguru import Logger

_DEFAULT_FORMAT = (
    "<green>{time:YYYY-MM-DD HH:mm:ss}</green> | "
    "<level>{level: <8}</level> | "
    "<cyan>{name}</cyan>:<cyan>{function}</cyan>:<cyan>{line}</cyan> | "
    "<level>{message}</level>"
)

_VERBOSITY_LEVELS = ("WARNING", "INFO", "DEBUG", "TRACE")


def setup_logger(
    level: str = "INFO",
    log_file: str | Path | None = None,
    rotation: str = "10 MB",
    retention: str = "1 week",
    format_string: str | None = None,
    colorize: bool = True,
    serialize: bool = False,
    capture_warnings: bool = True,
) -> None:
    """
    Configure loguru logger for the oikf library.

    Args:
        level: Logging level (DEBUG, INFO, WARNING, ERROR, CRITICAL)
        log_file: Optional path to log file. If None, only logs to stderr
        rotation: When to rotate log files (e.g., "10 MB", "1 day")
        retention: How long to keep old log files (e.g., "1 week", "30 days")
        format_string: Custom format string. If None, uses default format
        colorize: Whether to colorize console output
        serialize: Write the log file as one JSON record per line (machine-readable
            benchmark logs). Console output stays human-readable.
        capture_warnings: Route Python ``warnings`` (numpy/scipy ``RuntimeWarning`` such as
            overflow in a diverging filter) into the logger at WARNING level

    Example:
        >>> from oikf.utils.logging import setup_logger
        >>> setup_logger(level="DEBUG", log_file="logs/oikf-bench.jsonl", serialize=True)
    """
    logger.remove()

    if format_string is None:
        format_string = _DEFAULT_FORMAT

    logger.add(
        sys.stderr,
        format=format_string,
        level=level,
        colorize=colorize,
        backtrace=True,
        diagnose=True,
    )

    if log_file:
        log_path = Path(log_file)
        log_path.parent.mkdir(parents=True, exist_ok=True)

        logger.add(
            str(log_path),
            format=format_string,
            level=level,
            rotation=rotation,
            retention=retention,
            compression="zip",
            serialize=serialize,
            backtrace=True,
            diagnose=False,
        )

        logger.info(f"Logging to file: {log_path} (serialize={serialize})")

    if capture_warnings:
        warnings.showwarning = _show_warning


def level_from_verbosity(verbosity: int, quiet: bool = False) -> str:
    """
    Map a ``-v`` count to a loguru level name.

    Args:
        verbosity: Number of ``-v`` flags (0 -> WARNING, 1 -> INFO, 2 -> DEBUG, 3+ -> TRACE)
        quiet: Force ERROR regardless of verbosity

    Returns:
        Level name accepted by :func:`setup_logger`

    Example:
        >>> level_from_verbosity(2)
        'DEBUG'
    """
    if quiet:
        return "ERROR"
    index = min(max(verbosity, 0), len(_VERBOSITY_LEVELS) - 1)
    return _VERBOSITY_LEVELS[index]


def _show_warning(
    message: Warning | str,
    category: type[Warning],
    filename: str,
    lineno: int,
    file: TextIO | None = None,
    line: str | None = None,
) -> None:
    """``warnings.showwarning`` replacement that forwards to loguru."""
    logger.opt(depth=2).warning(f"{category.__name__}: {message} ({filename}:{lineno})")


def get_logger() -> "Logger":
    """
    Get the configured loguru logger instance.

    Returns:
        Loguru logger instance

    Example:
        >>> from oikf.utils.logging import get_logger
        >>> log = get_logger()
        >>> log.info("Monte Carlo sweep started")
    """
    return logger


# Library default is quiet; the oikf-bench CLI (or the caller) raises the level.
setup_logger(level="ERROR", colorize=True, capture_warnings=False)
