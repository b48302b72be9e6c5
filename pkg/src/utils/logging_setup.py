"""
Logging configuration driven by the SPGAN_LOG environment variable
"""

import logging
import os
import sys

from dotenv import load_dotenv

LOG_ENV_VAR = "SPGAN_LOG"
DEFAULT_LEVEL = "INFO"

_configured = False


def resolve_level(value: str = None) -> int:
    """Map a level name (case-insensitive) to a logging level, INFO when unknown"""
    if value is None:
        value = os.environ.get(LOG_ENV_VAR, DEFAULT_LEVEL)
    level = logging.getLevelName(value.strip().upper())
    return level if isinstance(level, int) else logging.INFO


def configure_logging(level: str = None) -> int:
    """
    Configure the package root logger once

    Args:
        level: Explicit level name; falls back to SPGAN_LOG (after loading .env)

    Returns:
        The numeric level in effect
    """
    global _configured
    load_dotenv()
    numeric = resolve_level(level)

    root = logging.getLogger("src")
    if not _configured:
        handler = logging.StreamHandler(sys.stderr)
        handler.setFormatter(logging.Formatter("%(message)s"))
        root.addHandler(handler)
        root.propagate = False
        _configured = True
    root.setLevel(numeric)
    return numeric


def progress_enabled() -> bool:
    """tqdm bars follow the logger: shown at INFO and below"""
    return logging.getLogger("src").getEffectiveLevel() <= logging.INFO
