#!/usr/bin/env python3
"""
errors.py

Exception hierarchy for the boundary-model laboratory. Library code raises these;
only the command-line layer catches them and turns them into exit codes.
"""


class SimulationError(Exception):
    """Base class for every error raised by the laboratory."""


class GridError(SimulationError):
    """Invalid grid size, spacing or layout for the requested operation."""


class ZeroMeanError(SimulationError):
    """The velocity law was handed data whose mean is not zero."""


class BlowupProximityError(SimulationError):
    """The closed-form CLM solution is too close to its singular time."""

    def __init__(self, message: str, min_denominator: float):
        super().__init__(message)
        self.min_denominator = min_denominator


class NumericalOverflowError(SimulationError):
    """A Runge-Kutta stage produced NaN or Inf."""


class DiagnosticsError(SimulationError):
    """A diagnostic quantity is undefined for the given state or inputs."""


class InequalityViolationError(SimulationError):
    """The kernel inequality suite found a sample violating its bound."""


class ConfigError(SimulationError):
    """A run configuration failed strict parsing; the message names the key."""

    def __init__(self, message: str, keys=()):
        super().__init__(message)
        self.keys = tuple(keys)
