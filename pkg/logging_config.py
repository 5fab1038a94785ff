"""Shared logging configuration.

Reports go to standard output, so every log line goes to standard error with
one format for the CLI, the self-test and ad hoc scripts.
"""

from __future__ import annotations

import logging
import os
from typing import Optional

# Dependencies that log on their own at DEBUG; the engine modules stay at the chosen level.
_QUIET_LOGGERS = ("hypothesis", "dotenv")


def configure_logging(component: str, level: Optional[int] = None) -> None:
    """Configure root logging and quieten third-party loggers."""

    env_level = os.getenv("LOG_LEVEL", "INFO").upper().strip()
    resolved_level = getattr(logging, env_level, logging.INFO)
    if level is not None:
        resolved_level = level

    # force=True replaces whatever an importing test runner set up before us.
    logging.basicConfig(
        level=resolved_level,
        format=f"%(asctime)s [{component}] %(levelname)s: %(message)s",
        force=True,
    )

    for name in _QUIET_LOGGERS:
        logging.getLogger(name).setLevel(max(resolved_level, logging.WARNING))
