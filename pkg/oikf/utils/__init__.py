"""Logging and configuration helpers."""

from oikf.utils.logging import get_logger, level_from_verbosity, setup_logger
from oikf.utils.parsing import decode_toml, load_toml, section, validate_or_raise

__all__ = [
    "decode_toml",
    "get_logger",
    "level_from_verbosity",
    "load_toml",
    "section",
    "setup_logger",
    "validate_or_raise",
]
