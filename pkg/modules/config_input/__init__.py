"""
config_input package.

Strict parsing of JSON run configurations into validated SimConfig objects.
"""

from .collector import load_config, load_config_file, parse_config
from .models import DiagOptions, InitialDataSpec, SimConfig

__all__ = ['DiagOptions', 'InitialDataSpec', 'SimConfig', 'load_config', 'load_config_file', 'parse_config']
