"""Logging configuration and utilities."""

import logging
import sys
from typing import Any

import structlog
from structlog.processors import JSONRenderer, TimeStamper, add_log_level

from app.core.config import LogFormat, Settings


def setup_logging(settings: Settings) -> None:
    """Configure structured logging.

    Logs go to stderr so that CSV/JSON written to stdout or result files
    stay machine readable.
    """
    log_level = str(getattr(settings.app.log_level, "value", settings.app.log_level)).upper()
    level_no = logging.getLevelName(log_level)
    if not isinstance(level_no, int):
        level_no = logging.INFO

    processors: list[Any] = [
        structlog.contextvars.merge_contextvars,
        add_log_level,
        TimeStamper(fmt="iso"),
        structlog.processors.StackInfoRenderer(),
        structlog.processors.format_exc_info,
    ]

    log_format = getattr(settings.app.log_format, "value", settings.app.log_format)
    if log_format == LogFormat.JSON.value:
        processors.append(JSONRenderer())
    else:
        processors.append(structlog.dev.ConsoleRenderer(colors=False))

    structlog.configure(
        wrapper_class=structlog.make_filtering_bound_logger(level_no),
        processors=processors,
        logger_factory=structlog.PrintLoggerFactory(file=sys.stderr),
        cache_logger_on_first_use=False,
    )

    logging.basicConfig(
        format="%(message)s",
        stream=sys.stderr,
        level=level_no,
    )


def get_logger(name: str) -> structlog.BoundLogger:
    """Get a structured logger for a module."""
    return structlog.get_logger(name)


class LoggerMixin:
    """Mixin providing logger access."""

    @property
    def logger(self) -> structlog.BoundLogger:
        """Get logger for this instance."""
        return get_logger(self.__class__.__module__)
