"""Configuration management using Pydantic settings.

This module implements a two-layer configuration system:
1. Environment: Loads raw values from environment variables (UPPER_CASE)
2. Settings: Clean application settings with lowercase fields and derived values

Usage:
    # Production: Load from environment
    settings = Settings.load()

    # Tests: Construct directly with test values
    settings = Settings(output_dir=tmp_path, jobs=1)

Only the output directory and the worker count may be overridden from the
environment; everything that shapes an experiment lives in the experiment
document (see app/schemas/experiment_schema.py).
"""

import logging
from pathlib import Path

from pydantic import BaseModel, ConfigDict, Field
from pydantic_settings import BaseSettings, SettingsConfigDict

from app.consts import DEFAULT_JOBS, DEFAULT_OUTPUT_DIR

# Project root directory (parent of app/)
_PROJECT_ROOT = Path(__file__).resolve().parent.parent

_LOG_LEVELS = ("DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL")


class Environment(BaseSettings):
    """Raw environment variable loading.

    This class loads values directly from environment variables with UPPER_CASE names.
    It should not contain any derived values or transformation logic.
    """

    model_config = SettingsConfigDict(
        env_file=_PROJECT_ROOT / ".env",
        env_file_encoding="utf-8",
        case_sensitive=True,
        extra="ignore",
    )

    AL_OUTPUT_DIR: str | None = Field(
        default=None,
        description="Directory that receives result files (overrides the experiment document)",
    )
    AL_JOBS: int | None = Field(
        default=None,
        description="Maximum number of runs executed concurrently (overrides the experiment document)",
    )
    LOG_LEVEL: str = Field(
        default="INFO",
        description="Root log level for the CLI",
    )
    METRICS_TEXTFILE_ENABLED: bool = Field(
        default=True,
        description="Write Prometheus counters to <out>/metrics.prom after run/compare",
    )


class Settings(BaseModel):
    """Application settings with lowercase fields.

    ``output_dir`` and ``jobs`` are None when the environment does not set
    them; callers then fall back to the experiment document and finally to
    the built-in defaults via ``resolve_output_dir`` / ``resolve_jobs``.
    """

    model_config = ConfigDict(from_attributes=True)

    output_dir: Path | None = None
    jobs: int | None = None
    log_level: str = "INFO"
    metrics_textfile_enabled: bool = True

    def resolve_output_dir(self, flag: Path | None = None, document: Path | None = None) -> Path:
        """Resolve the output directory: CLI flag > environment > document > default."""
        for candidate in (flag, self.output_dir, document):
            if candidate is not None:
                return Path(candidate)
        return Path(DEFAULT_OUTPUT_DIR)

    def resolve_jobs(self, flag: int | None = None, document: int | None = None) -> int:
        """Resolve the worker count: CLI flag > environment > document > default."""
        for candidate in (flag, self.jobs, document):
            if candidate is not None:
                return candidate
        return DEFAULT_JOBS

    @property
    def log_level_value(self) -> int:
        """Numeric logging level for logging.basicConfig()."""
        return logging.getLevelNamesMapping()[self.log_level.upper()]

    def validate_config(self) -> None:
        """Validate the resolved settings.

        Raises:
            ConfigurationError: If any setting is out of range
        """
        from app.exceptions import ConfigurationError

        errors: list[str] = []

        if self.jobs is not None and self.jobs < 1:
            errors.append(f"AL_JOBS must be at least 1 (got {self.jobs})")

        if self.log_level.upper() not in _LOG_LEVELS:
            errors.append(
                f"LOG_LEVEL must be one of {', '.join(_LOG_LEVELS)} (got {self.log_level!r})"
            )

        if errors:
            raise ConfigurationError(
                "Configuration validation failed:\n  - " + "\n  - ".join(errors)
            )

    @classmethod
    def load(cls, env: Environment | None = None) -> "Settings":
        """Load settings from environment variables.

        Args:
            env: Optional Environment instance (for testing). If None, loads from environment.

        Returns:
            Settings instance with all values resolved
        """
        if env is None:
            env = Environment()

        return cls(
            output_dir=Path(env.AL_OUTPUT_DIR) if env.AL_OUTPUT_DIR else None,
            jobs=env.AL_JOBS,
            log_level=env.LOG_LEVEL.upper(),
            metrics_textfile_enabled=env.METRICS_TEXTFILE_ENABLED,
        )
