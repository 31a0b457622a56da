"""Configuration management for Resonance Lab.

Process-level settings are loaded from environment variables with the
``RESONANCE_LAB_`` prefix. Run-level settings (potential, band, h values)
live in the JSON run configuration, see ``app.schemas.run_config``.
"""

from __future__ import annotations

from enum import Enum
from functools import lru_cache

from pydantic import Field, field_validator
from pydantic_settings import BaseSettings, SettingsConfigDict

ENV_PREFIX = "RESONANCE_LAB_"


class LogLevel(str, Enum):
    DEBUG = "DEBUG"
    INFO = "INFO"
    WARNING = "WARNING"
    ERROR = "ERROR"
    CRITICAL = "CRITICAL"


class LogFormat(str, Enum):
    CONSOLE = "console"
    JSON = "json"


class AppConfig(BaseSettings):
    name: str = Field(default="resonance-lab")
    version: str = Field(default="0.1.0")
    log_level: LogLevel = Field(default=LogLevel.INFO)
    log_format: LogFormat = Field(default=LogFormat.CONSOLE)

    model_config = SettingsConfigDict(env_prefix=ENV_PREFIX, extra="ignore")

    @field_validator("log_level", mode="before")
    @classmethod
    def validate_log_level(cls, v: str | LogLevel) -> LogLevel:
        if isinstance(v, LogLevel):
            return v
        return LogLevel(v.upper())

    @field_validator("log_format", mode="before")
    @classmethod
    def validate_log_format(cls, v: str | LogFormat) -> LogFormat:
        if isinstance(v, LogFormat):
            return v
        return LogFormat(v.lower())


class NumericsConfig(BaseSettings):
    # RESONANCE_LAB_THREADS caps the per-h parallelism of sweeps
    threads: int = Field(default=1, ge=1)
    ode_tol: float = Field(default=1e-10, gt=0)
    root_tol: float = Field(default=1e-11, gt=0)
    grid_n: int = Field(default=64, ge=2)
    max_samples: int = Field(default=20000, ge=16)

    model_config = SettingsConfigDict(env_prefix=ENV_PREFIX, extra="ignore")


class Settings(BaseSettings):
    app: AppConfig = Field(default_factory=AppConfig)
    numerics: NumericsConfig = Field(default_factory=NumericsConfig)


@lru_cache
def get_settings() -> Settings:
    """Get cached settings instance."""
    return Settings()


def reload_settings() -> Settings:
    """Reload settings (useful for testing)."""
    get_settings.cache_clear()
    return get_settings()
