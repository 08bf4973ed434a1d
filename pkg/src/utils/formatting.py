"""Small formatting and flag-parsing helpers for the CLI."""

import re
from typing import List, Optional, Sequence, Union

from .errors import ConfigError


def format_duration(seconds: float) -> str:
    """Format duration in seconds to readable string.

    Args:
        seconds: Duration in seconds

    Returns:
        Formatted duration string (HH:MM:SS or MM:SS)
    """
    hours = int(seconds // 3600)
    minutes = int((seconds % 3600) // 60)
    secs = int(seconds % 60)

    if hours > 0:
        return f"{hours:02d}:{minutes:02d}:{secs:02d}"
    else:
        return f"{minutes:02d}:{secs:02d}"


def slugify(name: str) -> str:
    """File-name-safe form of a setting label ("SeizNet 2ch" -> "seiznet_2ch")."""
    return re.sub(r"[^a-z0-9]+", "_", name.lower()).strip("_")


def parse_index_list(value: Union[str, Sequence[int], None]) -> Optional[List[int]]:
    """Parse "all" (None) or a comma list of non-negative integers like "0,3,5".

    Raises:
        ConfigError: Anything else
    """
    if value is None or str(value).strip().lower() == "all":
        return None
    if isinstance(value, (list, tuple)):
        value = ",".join(str(v) for v in value)
    try:
        indices = [int(v) for v in str(value).split(",") if v.strip()]
    except ValueError:
        raise ConfigError(f"Expected 'all' or a comma list of integers, got '{value}'")
    if not indices or any(i < 0 for i in indices):
        raise ConfigError(f"Expected 'all' or a comma list of non-negative integers, got '{value}'")
    return indices
