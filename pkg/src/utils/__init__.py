"""Utility functions and helpers."""

from .config import RunConfig, load_config
from .console import console, setup_logging
from .errors import ConfigError, DataContractError, ToolkitError
from .formatting import format_duration

__all__ = [
    "ConfigError",
    "DataContractError",
    "RunConfig",
    "ToolkitError",
    "console",
    "format_duration",
    "load_config",
    "setup_logging",
]
