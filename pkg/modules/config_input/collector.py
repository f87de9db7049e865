#!/usr/bin/env python3
"""
collector.py

Reads run configurations from JSON documents and validates them into SimConfig.
Parsing is strict: unknown keys, type mismatches and range violations all raise a
ConfigError whose message names the offending key.
"""

import logging
from pathlib import Path
from typing import Union

from pydantic import ValidationError

from ..errors import ConfigError
from .models import SimConfig

logger = logging.getLogger(__name__)

# ===========================
# Parsing
# ===========================

def _describe(error: dict) -> str:
    location = ".".join(str(part) for part in error["loc"]) or "config"
    return f"{location}: {error['msg']}"


def parse_config(text: str) -> SimConfig:
    """
    Validate a JSON document into a SimConfig.

    Args:
        text (str): The JSON object as text.

    Returns:
        SimConfig: The validated configuration with every default filled in.

    Raises:
        ConfigError: naming each offending key.
    """
    try:
        config = SimConfig.model_validate_json(text)
    except ValidationError as ve:
        errors = ve.errors()
        keys = [".".join(str(part) for part in err["loc"]) or "config" for err in errors]
        message = "; ".join(_describe(err) for err in errors)
        logger.debug(f"Configuration rejected: {message}", exc_info=True)
        raise ConfigError(f"invalid configuration: {message}", keys) from ve
    logger.debug(f"Configuration accepted: model={config.model.value} N={config.grid_n}")
    return config

# ===========================
# Files
# ===========================

def load_config_file(file_path: Union[str, Path]) -> str:
    """
    Read a configuration document from disk.

    Raises:
        ConfigError: if the file is missing or unreadable.
    """
    try:
        logger.info(f"Reading run configuration from file: {file_path}")
        with open(file_path, "r", encoding="utf-8") as file:
            return file.read()
    except FileNotFoundError as fnf:
        logger.error(f"File not found: {file_path}")
        raise ConfigError(f"configuration file not found: {file_path}", ("path",)) from fnf
    except OSError as exc:
        logger.error(f"Could not read {file_path}: {exc}", exc_info=True)
        raise ConfigError(f"configuration file unreadable: {file_path}", ("path",)) from exc


def load_config(file_path: Union[str, Path]) -> SimConfig:
    return parse_config(load_config_file(file_path))
