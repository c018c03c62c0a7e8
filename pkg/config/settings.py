"""Laboratory settings using Pydantic Settings."""

import json
from pathlib import Path

from pydantic import Field, field_validator
from pydantic_settings import BaseSettings, SettingsConfigDict

LOG_LEVELS = ("DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL")


class Settings(BaseSettings):
    """Lab-wide settings with validation."""

    # Logging
    log_level: str = Field(default="INFO", description="Root log level")
    log_file: Path | None = Field(default=None, description="Optional log file")
    log_format: str | None = Field(
        default=None, description="Custom logging format string"
    )

    # Runs
    output_root: Path = Field(
        default=Path("runs"),
        description="Parent directory of run outputs when a config names none",
    )
    default_workers: int = Field(
        default=1, ge=1, description="Worker pool size for verify and sweep"
    )
    default_seed: int = Field(default=0, description="Seed used when a config names none")

    model_config = SettingsConfigDict(
        env_prefix="OBSTACLELAB_",
        env_file=".env",
        env_file_encoding="utf-8",
        case_sensitive=False,
        extra="ignore",
    )

    @field_validator("log_level")
    @classmethod
    def validate_log_level(cls, v: str) -> str:
        level = v.upper()
        if level not in LOG_LEVELS:
            raise ValueError(f"log_level must be one of {', '.join(LOG_LEVELS)}")
        return level

    @classmethod
    def from_json_file(cls, file_path: Path) -> "Settings":
        """Load settings from a JSON file."""
        if not file_path.exists():
            raise FileNotFoundError(
                f"Settings file not found: {file_path}. "
                f"Please see config/settings_template.json"
            )

        with open(file_path) as f:
            data = json.load(f)

        return cls(**data)


# Global settings instance (initialized on first use)
_settings: Settings | None = None


def get_settings() -> Settings:
    """Get the laboratory settings instance."""
    global _settings
    if _settings is None:
        # Try config/settings.json first, then environment variables
        settings_file = Path("config/settings.json").absolute()
        if settings_file.exists():
            _settings = Settings.from_json_file(settings_file)
        else:
            _settings = Settings()
    return _settings


def initialize_settings() -> Settings:
    """Initialize settings at CLI startup."""
    return get_settings()


def reset_settings() -> None:
    """Drop the cached instance (tests and ``init``)."""
    global _settings
    _settings = None
