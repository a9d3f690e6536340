"""Configuration management for the hbtsim toolkit."""

import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from dotenv import load_dotenv

# Load environment variables FIRST
load_dotenv()

_LOG_LEVELS = ("DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL")


def _env_flag(name: str, default: str = "false") -> bool:
    return os.getenv(name, default).strip().lower() in ("1", "true", "yes", "on")


def _env_int(name: str, default: str) -> Any:
    # unparsable values are kept as text and rejected by Settings.validate
    raw = os.getenv(name, default).strip()
    try:
        return int(raw)
    except ValueError:
        return raw


@dataclass
class Settings:
    """Process-wide settings with sensible defaults, read from the environment."""

    # Logging
    log_level: str = field(
        default_factory=lambda: os.getenv("HBTSIM_LOG_LEVEL", "WARNING").upper()
    )

    # Simulation workers (results never depend on this value)
    threads: int = field(
        default_factory=lambda: _env_int("HBTSIM_THREADS", "1")
    )

    # Block bootstrap defaults
    bootstrap_blocks: int = field(
        default_factory=lambda: _env_int("HBTSIM_BOOTSTRAP_BLOCKS", "100")
    )
    bootstrap_resamples: int = field(
        default_factory=lambda: _env_int("HBTSIM_BOOTSTRAP_RESAMPLES", "200")
    )
    bootstrap_seed: int = field(
        default_factory=lambda: _env_int("HBTSIM_BOOTSTRAP_SEED", "0")
    )

    # Progress bars for sweeps
    show_progress: bool = field(
        default_factory=lambda: _env_flag("HBTSIM_PROGRESS")
    )

    # Default output directory for relative output paths
    output_dir: Path = field(
        default_factory=lambda: Path(os.getenv("HBTSIM_OUTPUT_DIR", "."))
    )

    environment: str = field(
        default_factory=lambda: os.getenv("ENVIRONMENT", "development")
    )

    app_version: str = field(
        default_factory=lambda: os.getenv("APP_VERSION", "0.1.0")
    )

    def validate(self) -> None:
        """Validate the configuration."""
        if self.log_level not in _LOG_LEVELS:
            raise ValueError(
                f"HBTSIM_LOG_LEVEL must be one of {', '.join(_LOG_LEVELS)}, got {self.log_level!r}"
            )

        for value, name in (
            (self.threads, "HBTSIM_THREADS"),
            (self.bootstrap_blocks, "HBTSIM_BOOTSTRAP_BLOCKS"),
            (self.bootstrap_resamples, "HBTSIM_BOOTSTRAP_RESAMPLES"),
            (self.bootstrap_seed, "HBTSIM_BOOTSTRAP_SEED"),
        ):
            if not isinstance(value, int) or isinstance(value, bool):
                raise ValueError(f"{name} must be an integer, got {value!r}")

        if self.threads < 1:
            raise ValueError("HBTSIM_THREADS must be at least 1")

        if self.bootstrap_blocks < 10:
            raise ValueError("HBTSIM_BOOTSTRAP_BLOCKS must be at least 10")

        if self.bootstrap_resamples < 2:
            raise ValueError("HBTSIM_BOOTSTRAP_RESAMPLES must be at least 2")

        if self.bootstrap_seed < 0:
            raise ValueError("HBTSIM_BOOTSTRAP_SEED must be non-negative")


# Global settings instance
settings = Settings()
