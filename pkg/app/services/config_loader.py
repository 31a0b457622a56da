"""Run-file loading: JSON text plus flag overrides into a validated RunConfig."""

from __future__ import annotations

from pathlib import Path
from typing import Any

import orjson
from pydantic import ValidationError as PydanticValidationError

from app.core.errors import ConfigParseError, ConfigValidationError
from app.core.logging import get_logger
from app.schemas.run_config import RunConfig

logger = get_logger(__name__)


def _field_path(loc: tuple[Any, ...]) -> str:
    return ".".join(str(part) for part in loc) or "<root>"


def parse_config_text(text: bytes | str, overrides: dict[str, Any] | None = None) -> RunConfig:
    try:
        data = orjson.loads(text) if text.strip() else {}
    except orjson.JSONDecodeError as exc:
        raise ConfigParseError(
            f"Invalid JSON in run configuration: {exc.msg}",
            details={"line": exc.lineno, "column": exc.colno},
        ) from exc
    if not isinstance(data, dict):
        raise ConfigParseError(
            "Run configuration must be a JSON object",
            details={"line": 1, "column": 1, "type": type(data).__name__},
        )

    merged = {**data, **{k: v for k, v in (overrides or {}).items() if v is not None}}
    try:
        return RunConfig.model_validate(merged)
    except PydanticValidationError as exc:
        errors = exc.errors(include_url=False, include_context=False, include_input=False)
        first = errors[0]
        field = _field_path(first["loc"])
        raise ConfigValidationError(
            f"Invalid run configuration field '{field}': {first['msg']}",
            details={
                "field": field,
                "errors": [{"field": _field_path(e["loc"]), "message": e["msg"]} for e in errors],
            },
        ) from exc


def parse_config(
    path: str | Path | None = None, overrides: dict[str, Any] | None = None
) -> RunConfig:
    """Load, merge and validate a run configuration.

    Without a path the configuration is built from ``overrides`` alone.
    Unknown keys are rejected.
    """
    if path is None:
        return parse_config_text(b"", overrides)
    source = Path(path)
    try:
        text = source.read_bytes()
    except OSError as exc:
        raise ConfigParseError(
            f"Cannot read run configuration: {exc.strerror}",
            details={"path": str(source), "line": 0, "column": 0},
        ) from exc
    config = parse_config_text(text, overrides)
    logger.debug("config_loaded", path=str(source), overrides=sorted(overrides or {}))
    return config


def dump_config(config: RunConfig) -> bytes:
    """Canonical JSON form of a RunConfig; ``parse_config_text`` reads it back to an equal model."""
    return orjson.dumps(
        config.model_dump(mode="json"), option=orjson.OPT_INDENT_2 | orjson.OPT_SORT_KEYS
    )
