"""Exception types raised across the toolkit."""

from typing import Optional


class ToolkitError(Exception):
    """Base class for every error the toolkit raises on purpose."""


class ConfigError(ToolkitError):
    """Invalid configuration value or unusable command-line combination."""


class DataContractError(ToolkitError):
    """Input data violates a documented contract."""


class IngestionError(DataContractError):
    """A recording or annotation file could not be parsed."""

    def __init__(self, message: str, path: Optional[str] = None, line: Optional[int] = None):
        """Initialize ingestion error.

        Args:
            message: Description of the violated contract
            path: File being read
            line: 1-based line number of the offending row
        """
        location = ""
        if path is not None:
            location = f"{path}"
            if line is not None:
                location += f", line {line}"
            location += ": "
        super().__init__(f"{location}{message}")
        self.path = path
        self.line = line


class AnnotationError(DataContractError):
    """Seizure intervals are inverted, overlapping or out of range."""


class ChannelError(DataContractError):
    """Requested channels are unknown or do not match the model."""


class ShapeError(DataContractError):
    """Array shapes disagree with what an operation requires."""


class TrainingError(ToolkitError):
    """Training set cannot be used (e.g. a single class)."""


class DecodingError(ToolkitError):
    """Activation maximization was misconfigured or diverged."""
