"""Configuration management using pydantic-settings.
Loads FGOOD_* environment variables (and a .env file) and provides type-safe settings.
"""

from pathlib import Path

import logfire
from pydantic import field_validator
from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """Toolkit settings loaded from environment variables"""

    model_config = SettingsConfigDict(
        env_file=Path(__file__).resolve().parent.parent / ".env",
        env_file_encoding="utf-8",
        env_prefix="FGOOD_",
        case_sensitive=False,
        extra="ignore",
    )

    # Core
    DEBUG: bool = False
    SECRET_KEY: str = "fine-grained-ood-local-only"

    # Outputs: overrides --out on every command when set
    OUTPUT_DIR: str = ""

    # Experiment worker pool bound
    MAX_WORKERS: int = 2

    # Logging
    LOGFIRE_TOKEN: str = ""

    # Testing
    RUN_EXPERIMENT_TESTS: bool = False

    @field_validator("MAX_WORKERS", mode="after")
    @classmethod
    def clamp_max_workers(cls, v: int) -> int:
        """Keep at least one worker"""
        return max(1, v)

    @property
    def output_dir(self) -> Path | None:
        """Output directory override, or None when unset"""
        return Path(self.OUTPUT_DIR) if self.OUTPUT_DIR else None


# Global settings instance
settings = Settings()


def configure_logfire(console: bool = True) -> None:
    """Configure Logfire from the FGOOD_* settings.

    Spans go to Logfire only when a token is set; ``console=False`` silences local output.
    """
    options = logfire.ConsoleOptions(verbose=settings.DEBUG) if console else False
    if settings.LOGFIRE_TOKEN:
        logfire.configure(token=settings.LOGFIRE_TOKEN, service_name="fine-grained-ood", console=options)
    else:
        logfire.configure(send_to_logfire=False, console=options)
