"""Runtime settings read from the environment (and an optional .env file)."""

from __future__ import annotations

import logging
import os
from dataclasses import dataclass, replace
from typing import Optional

from dotenv import load_dotenv
from sympy import Rational

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Settings:
    tolerance: Rational = Rational(1, 10**9)
    refinement_cap: int = 64
    selftest_instances: int = 500
    selftest_seed: int = 20240601

    def with_tolerance(self, tolerance: Optional[Rational]) -> "Settings":
        if tolerance is None:
            return self
        return replace(self, tolerance=Rational(tolerance))

    def to_dict(self):
        return {
            "tolerance": str(self.tolerance),
            "refinement_cap": self.refinement_cap,
            "selftest_instances": self.selftest_instances,
            "selftest_seed": self.selftest_seed,
        }


def _env_int(name: str, default: int) -> int:
    raw = os.getenv(name)
    if raw is None or not raw.strip():
        return default
    try:
        return int(raw)
    except ValueError:
        logger.warning(f"Ignoring non-integer {name}={raw!r}, using {default}")
        return default


def load_settings() -> Settings:
    """Build settings from LEFSCHETZ_* environment variables."""
    load_dotenv()
    defaults = Settings()
    tolerance = defaults.tolerance
    raw_tolerance = os.getenv("LEFSCHETZ_TOLERANCE")
    if raw_tolerance:
        try:
            tolerance = Rational(raw_tolerance.strip())
        except (TypeError, ValueError):
            logger.warning(f"Ignoring malformed LEFSCHETZ_TOLERANCE={raw_tolerance!r}")
        if tolerance <= 0:
            logger.warning("LEFSCHETZ_TOLERANCE must be positive, using default")
            tolerance = defaults.tolerance
    return Settings(
        tolerance=tolerance,
        refinement_cap=max(1, _env_int("LEFSCHETZ_REFINEMENT_CAP", defaults.refinement_cap)),
        selftest_instances=max(1, _env_int("LEFSCHETZ_SELFTEST_INSTANCES", defaults.selftest_instances)),
        selftest_seed=_env_int("LEFSCHETZ_SELFTEST_SEED", defaults.selftest_seed),
    )


# Singleton instance for easy access
_settings: Optional[Settings] = None


def get_settings() -> Settings:
    """Get or create the process-wide Settings instance"""
    global _settings
    if _settings is None:
        _settings = load_settings()
    return _settings


def use_settings(settings: Settings) -> Settings:
    """Replace the process-wide settings, e.g. after a --tolerance flag."""
    global _settings
    _settings = settings
    logger.debug(f"Settings in use: {settings.to_dict()}")
    return settings
