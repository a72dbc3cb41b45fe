"""Errors raised while reading run configurations and data files."""

from pathlib import Path


class ConfigError(ValueError):
    """A run configuration is missing, malformed or carries an unknown key."""

    def __init__(self, message: str, key: str | None = None):
        super().__init__(message)
        self.key = key


class DataFileError(ValueError):
    """A scores, report or table file could not be read."""

    def __init__(self, message: str, path: str | Path | None = None, line_number: int | None = None):
        location = str(path) if path is not None else ""
        if line_number is not None:
            location = f"{location}:{line_number}" if location else f"line {line_number}"
        super().__init__(f"{location}: {message}" if location else message)
        self.path = Path(path) if path is not None else None
        self.line_number = line_number
