"""Context-rich TOML decoding and Pydantic validation for oikf configuration files.

Every configuration entry point (model files, experiment files, dataset schema sidecars)
goes through the same *decode -> validate* step so that a bad file fails **loudly** with the
file and section that produced it.

Hardening guarantees:

- ``nan`` / ``inf`` / ``-inf`` TOML floats are **rejected**. TOML accepts them, which would let
  a non-finite noise variance or sampling interval reach a covariance matrix and poison a whole
  Monte Carlo sweep without an error.
- Decode and structural-validation failures carry the ``path [section]`` context.
- Configuration always goes through full Pydantic validation (``model_validate``).
"""

import math
import sys
from pathlib import Path
from typing import Any, TypeVar

from loguru import logger
from pydantic import BaseModel, ValidationError

from oikf.exceptions import ConfigError

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover
    import tomli as tomllib

__all__ = [
    "decode_toml",
    "load_toml",
    "section",
    "validate_or_raise",
]

ModelT = TypeVar("ModelT", bound=BaseModel)


def _find_nonfinite(value: Any, where: str) -> str | None:
    """Return the dotted key of the first non-finite float in ``value``, or None."""
    if isinstance(value, float):
        return None if math.isfinite(value) else where
    if isinstance(value, dict):
        for key, item in value.items():
            found = _find_nonfinite(item, f"{where}.{key}" if where else str(key))
            if found is not None:
                return found
    if isinstance(value, list):
        for index, item in enumerate(value):
            found = _find_nonfinite(item, f"{where}[{index}]")
            if found is not None:
                return found
    return None


def decode_toml(text: str, *, context: str) -> dict[str, Any]:
    """Decode a TOML document, rejecting non-finite floats, with error context.

    Args:
        text: Raw file contents.
        context: Human-readable origin used in any raised error/log line (usually the path).

    Returns:
        The decoded TOML table.

    Raises:
        ConfigError: If the text is not valid TOML or contains ``nan``/``inf``.
    """
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        logger.error(f"Failed to decode TOML for {context}: {exc}")
        raise ConfigError(f"Failed to decode TOML for {context}: {exc}") from exc

    bad_key = _find_nonfinite(data, "")
    if bad_key is not None:
        logger.error(f"Non-finite value at '{bad_key}' in {context}")
        raise ConfigError(f"Non-finite value at '{bad_key}' in {context} is not allowed")
    return data


def load_toml(path: str | Path) -> dict[str, Any]:
    """Read and decode a TOML file.

    Raises:
        ConfigError: If the file cannot be read or decoded.
    """
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        logger.error(f"Cannot read config file {path}: {exc}")
        raise ConfigError(f"Cannot read config file {path}: {exc}") from exc
    logger.debug(f"Loaded config file {path} ({len(text)} chars)")
    return decode_toml(text, context=str(path))


def section(data: dict[str, Any], name: str, *, context: str) -> dict[str, Any]:
    """Return table ``[name]`` from decoded TOML (empty if absent).

    Raises:
        ConfigError: If ``name`` exists but is not a table.
    """
    value = data.get(name, {})
    if not isinstance(value, dict):
        kind = type(value).__name__
        raise ConfigError(f"Expected [{name}] to be a table in {context}, got {kind}")
    return value


def validate_or_raise(model_cls: type[ModelT], data: Any, *, context: str) -> ModelT:
    """Validate ``data`` into ``model_cls``, logging file/section context on failure.

    The original :class:`pydantic.ValidationError` is re-raised unchanged so callers that
    catch it keep working; the actionable context is emitted to the error log.

    Args:
        model_cls: Target Pydantic model.
        data: Decoded table to validate.
        context: Human-readable origin (``"exp.toml [oikf]"``) for the log line.

    Returns:
        A validated ``model_cls`` instance.

    Raises:
        pydantic.ValidationError: If ``data`` does not satisfy the model.
    """
    try:
        return model_cls.model_validate(data)
    except ValidationError:
        logger.error(f"Validation failed for {context} ({model_cls.__name__})")
        raise
