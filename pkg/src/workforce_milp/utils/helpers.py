"""Utility functions for workforce-milp."""

import json
import logging
import math
import re
from pathlib import Path
from typing import Any, Optional, Tuple, Union

logger = logging.getLogger(__name__)

_CLOCK_RE = re.compile(r"^\s*(\d{1,2}):(\d{2})\s*$")
_QUANTITY_RE = re.compile(r"^\s*\$?\s*([-+]?\d+(?:\.\d+)?)\s*([A-Za-z][A-Za-z ]*)?\s*$")
_UNIT_MINUTES = {
    "minute": 1,
    "minutes": 1,
    "min": 1,
    "mins": 1,
    "hour": 60,
    "hours": 60,
    "h": 60,
    "hr": 60,
    "hrs": 60,
    "day": 1440,
    "days": 1440,
}


def ensure_directory(path: Union[str, Path]) -> Path:
    """Ensure a directory exists, creating it if necessary.

    Args:
        path: Directory path to ensure exists.

    Returns:
        Path object for the directory.
    """
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    return path


def sanitize_name(name: str) -> str:
    """Turn an arbitrary label into an identifier made of [A-Za-z0-9_].

    Args:
        name: Label to clean.

    Returns:
        Identifier that LP readers accept.
    """
    cleaned = re.sub(r"[^A-Za-z0-9_]", "_", name.strip())
    cleaned = re.sub(r"_+", "_", cleaned).strip("_")
    if not cleaned:
        cleaned = "unnamed"
    if cleaned[0].isdigit():
        cleaned = f"n_{cleaned}"
    return cleaned


def slugify(name: str) -> str:
    """Lowercase-hyphenated form of a display name, used for graph node ids."""
    return re.sub(r"[^a-z0-9]+", "-", name.lower()).strip("-")


def parse_clock(value: Any, field: str = "time") -> int:
    """Parse a 24-hour "HH:MM" string into minutes since midnight.

    Raises:
        ValueError: If the value is not a valid clock time.
    """
    match = _CLOCK_RE.match(str(value))
    if not match:
        raise ValueError(f"{field} {value!r} is not a 24-hour HH:MM time")
    hours, minutes = int(match.group(1)), int(match.group(2))
    if minutes >= 60 or hours > 24 or (hours == 24 and minutes != 0):
        raise ValueError(f"{field} {value!r} is out of range")
    return hours * 60 + minutes


def parse_quantity(value: Any, field: str = "value") -> Tuple[float, Optional[str]]:
    """Parse a number that may arrive as a string with a unit ("1440", "7 days", "$600").

    Returns:
        Tuple of (number, lowercase unit or None).

    Raises:
        ValueError: If the value is missing or not numeric.
    """
    if isinstance(value, bool) or value is None:
        raise ValueError(f"{field} {value!r} is not a number")
    if isinstance(value, (int, float)):
        number = float(value)
        unit = None
    else:
        match = _QUANTITY_RE.match(str(value).replace(",", ""))
        if not match:
            raise ValueError(f"{field} {value!r} is not a number")
        number = float(match.group(1))
        unit = match.group(2).strip().lower() if match.group(2) else None
    if not math.isfinite(number):
        raise ValueError(f"{field} {value!r} is not finite")
    return number, unit


def parse_number(value: Any, field: str = "value") -> float:
    """Parse a plain number, ignoring any trailing unit word."""
    return parse_quantity(value, field)[0]


def parse_int(value: Any, field: str = "value") -> int:
    """Parse a number that must be integral."""
    number = parse_number(value, field)
    if abs(number - round(number)) > 1e-9:
        raise ValueError(f"{field} {value!r} is not an integer")
    return int(round(number))


def parse_minutes(value: Any, field: str = "duration", default_unit: str = "minutes") -> int:
    """Parse a duration into whole minutes ("480", "8 hours", 480)."""
    number, unit = parse_quantity(value, field)
    unit = unit or default_unit
    if unit not in _UNIT_MINUTES:
        raise ValueError(f"{field} {value!r} has unknown unit {unit!r}")
    minutes = number * _UNIT_MINUTES[unit]
    if abs(minutes - round(minutes)) > 1e-9:
        raise ValueError(f"{field} {value!r} is not a whole number of minutes")
    return int(round(minutes))


def format_number(value: float) -> str:
    """Format a number without float noise: integral values print as integers."""
    if abs(value - round(value)) < 1e-9:
        return str(int(round(value)))
    return f"{value:.6f}".rstrip("0").rstrip(".")


def write_json(path: Union[str, Path], data: Any) -> Path:
    """Write JSON with sorted keys and a trailing newline, creating the parent directory."""
    path = Path(path)
    ensure_directory(path.parent)
    path.write_text(
        json.dumps(data, indent=2, sort_keys=True, ensure_ascii=False) + "\n", encoding="utf-8"
    )
    return path
