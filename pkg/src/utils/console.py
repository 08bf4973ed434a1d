"""Shared rich console and logging setup."""

import logging
import os
from typing import Optional

from rich.console import Console
from rich.logging import RichHandler


console = Console()


def setup_logging(level: Optional[str] = None) -> None:
    """Route library logging through rich.

    Args:
        level: Log level name; falls back to SEIZNET_LOG_LEVEL, then WARNING
    """
    level_name = (level or os.getenv("SEIZNET_LOG_LEVEL") or "WARNING").upper()
    logging.basicConfig(
        level=getattr(logging, level_name, logging.WARNING),
        format="%(message)s",
        datefmt="[%X]",
        handlers=[RichHandler(console=console, show_path=False, rich_tracebacks=False)],
        force=True,
    )
