"""
Logging helpers for es-unicycle.
All modules log through a single package root so the CLI can tune verbosity in one place.
"""

import logging
import sys
from typing import Optional, Union

ROOT_LOGGER_NAME = "es_unicycle"
LOG_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"

_configured = False


def _configure_root() -> logging.Logger:
    """Attach the stream handler to the package root exactly once."""
    global _configured
    root = logging.getLogger(ROOT_LOGGER_NAME)
    if not _configured:
        handler = logging.StreamHandler(sys.stderr)
        handler.setFormatter(logging.Formatter(LOG_FORMAT))
        root.addHandler(handler)
        root.setLevel(logging.WARNING)
        root.propagate = False
        _configured = True
    return root


def get_logger(name: Optional[str] = None) -> logging.Logger:
    """
    Get a logger below the package root.

    Args:
        name: Module name, usually ``__name__``

    Returns:
        Configured logger
    """
    root = _configure_root()
    if not name or name == ROOT_LOGGER_NAME:
        return root
    if not name.startswith(ROOT_LOGGER_NAME + "."):
        name = f"{ROOT_LOGGER_NAME}.{name}"
    return logging.getLogger(name)


def set_log_level(level: Union[str, int]) -> None:
    """
    Set the level of the package root logger.

    Args:
        level: Level name ("DEBUG", "INFO", ...) or numeric level
    """
    if isinstance(level, str):
        level = getattr(logging, level.upper())
    _configure_root().setLevel(level)


class EsLogger:
    """Context manager that temporarily changes the package log level."""

    def __init__(self, level: Union[str, int]):
        self.level = level
        self._previous: Optional[int] = None

    def __enter__(self) -> logging.Logger:
        root = _configure_root()
        self._previous = root.level
        set_log_level(self.level)
        return root

    def __exit__(self, exc_type, exc, tb) -> None:
        if self._previous is not None:
            _configure_root().setLevel(self._previous)
