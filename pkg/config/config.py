#!/usr/bin/env python3
"""
config.py

Process-level settings: logging setup, the SIM_THREADS study width and package paths.
"""

import logging
import os
import sys
from pathlib import Path

BASE_DIR = Path(__file__).resolve().parent.parent
TEMPLATES_DIR = BASE_DIR / "templates"

LOG_FORMAT = "%(asctime)s - %(levelname)s - %(message)s"


def configure_logging(quiet: bool = False, verbose: bool = False) -> None:
    """Configure the root logger once for the command-line entry point."""
    level = logging.WARNING if quiet else (logging.DEBUG if verbose else logging.INFO)
    logging.basicConfig(
        level=level,
        format=LOG_FORMAT,
        handlers=[logging.StreamHandler(sys.stdout)],
        force=True,
    )


def get_sim_threads() -> int:
    """Parallel width for studies: SIM_THREADS if set to a positive integer, else the CPU count."""
    raw = os.environ.get("SIM_THREADS")
    if raw:
        try:
            value = int(raw)
        except ValueError:
            logging.getLogger(__name__).warning(f"Ignoring non-integer SIM_THREADS={raw!r}")
        else:
            if value > 0:
                return value
            logging.getLogger(__name__).warning(f"Ignoring non-positive SIM_THREADS={raw!r}")
    return os.cpu_count() or 1
