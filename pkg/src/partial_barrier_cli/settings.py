import enum
from typing import Optional

from pydantic import AliasChoices, Field
from pydantic_settings import BaseSettings, SettingsConfigDict


class LogLevel(str, enum.Enum):
    """Possible log levels."""

    NOTSET = "NOTSET"
    DEBUG = "DEBUG"
    INFO = "INFO"
    WARNING = "WARNING"
    ERROR = "ERROR"
    FATAL = "FATAL"


class Settings(BaseSettings):
    """
    Process settings.

    These parameters can be configured
    with environment variables.
    """

    log_level: LogLevel = LogLevel.INFO
    # timezone of the console timing stamps
    timezone: str = "UTC"
    # threads computing worker payloads; 0 computes them inline
    parallel_workers: int = Field(default=0, ge=0)
    # print timing panels after each command
    monitor: bool = True
    # any non-empty NO_COLOR disables ANSI styling
    no_color: Optional[str] = Field(
        default=None, validation_alias=AliasChoices("NO_COLOR", "PARTIAL_BARRIER_NO_COLOR")
    )

    @property
    def color(self) -> bool:
        return not self.no_color

    model_config = SettingsConfigDict(
        env_file=".env",
        env_prefix="PARTIAL_BARRIER_",
        env_file_encoding="utf-8",
        extra="ignore",
    )


settings = Settings()
