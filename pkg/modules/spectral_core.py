#!/usr/bin/env python3
"""
spectral_core.py

Periodic collocation grids and the spectral operators built on them: differentiation,
the cotangent-kernel Hilbert transform, velocity reconstruction from vorticity,
trigonometric-interpolant evaluation, 2/3 dealiasing and a resolution monitor.

Spectra use numpy's half storage (rfft). The Hilbert transform is the multiplier
-i*sgn(k), which is the normalization of (1/L) PV int w(y) cot[mu (z - y)] dy with
mu = pi/L; the quadrature oracle at the bottom of this module pins the sign.
"""

import logging
import threading
from enum import Enum
from functools import lru_cache
from typing import Callable, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, field_validator

from .errors import GridError, ZeroMeanError

logger = logging.getLogger(__name__)

ZERO_MEAN_RTOL = 1e-12

# -----------------------------------------------------------------------------
# Grids
# -----------------------------------------------------------------------------

class GridLayout(str, Enum):
    NODE = "node"          # z_j = j L / N
    MIDPOINT = "midpoint"  # z_j = (j + 1/2) L / N, avoids z = 0 and z = L/2


class DealiasRule(str, Enum):
    TWO_THIRDS = "two_thirds"
    NONE = "none"


def check_grid_size(value: int) -> int:
    if value < 8 or value & (value - 1):
        raise ValueError(f"grid size must be a power of two >= 8, got {value}")
    return value


class PeriodicGrid(BaseModel):
    """Uniform collocation mesh on the circle of circumference ``length``."""

    model_config = ConfigDict(frozen=True)

    n_points: int
    length: float
    layout: GridLayout = GridLayout.NODE

    @field_validator("n_points")
    @classmethod
    def _power_of_two(cls, value: int) -> int:
        return check_grid_size(value)

    @field_validator("length")
    @classmethod
    def _positive_length(cls, value: float) -> float:
        if not np.isfinite(value) or value <= 0:
            raise ValueError(f"length must be positive and finite, got {value}")
        return value

    @property
    def spacing(self) -> float:
        return self.length / self.n_points

    @property
    def mu(self) -> float:
        return np.pi / self.length

    @property
    def offset(self) -> float:
        return 0.5 * self.spacing if self.layout == GridLayout.MIDPOINT else 0.0

    @property
    def points(self) -> np.ndarray:
        return _grid_points(self.n_points, self.length, self.layout)

    @property
    def wavenumbers(self) -> np.ndarray:
        """Angular wavenumbers 2*pi*k/L for the rfft half spectrum."""
        return _wavenumbers(self.n_points, self.length)

    def refined(self, factor: int) -> "PeriodicGrid":
        return PeriodicGrid(n_points=self.n_points * factor, length=self.length, layout=self.layout)

    def reflection_index(self) -> np.ndarray:
        """Index permutation realizing z -> -z (mod L) on this grid."""
        j = np.arange(self.n_points)
        if self.layout == GridLayout.MIDPOINT:
            return self.n_points - 1 - j
        return (-j) % self.n_points

    def half_domain_mask(self) -> np.ndarray:
        """Grid points strictly inside (0, L/2)."""
        z = self.points
        return (z > 0.0) & (z < 0.5 * self.length)


@lru_cache(maxsize=64)
def _grid_points(n_points: int, length: float, layout: GridLayout) -> np.ndarray:
    h = length / n_points
    shift = 0.5 if layout == GridLayout.MIDPOINT else 0.0
    z = (np.arange(n_points) + shift) * h
    z.setflags(write=False)
    return z


@lru_cache(maxsize=64)
def _wavenumbers(n_points: int, length: float) -> np.ndarray:
    k = 2.0 * np.pi / length * np.arange(n_points // 2 + 1)
    k.setflags(write=False)
    return k


def mode_weights(n_points: int) -> np.ndarray:
    """Multiplicity of each half-spectrum entry in the full two-sided spectrum."""
    w = np.full(n_points // 2 + 1, 2.0)
    w[0] = 1.0
    w[-1] = 1.0
    return w

# -----------------------------------------------------------------------------
# Fields
# -----------------------------------------------------------------------------

def _check_zero_mean(values: np.ndarray) -> None:
    mean = float(np.mean(values))
    tolerance = ZERO_MEAN_RTOL * (float(np.max(np.abs(values))) + 1.0)
    if abs(mean) >= tolerance:
        raise ZeroMeanError(f"field mean {mean:.3e} exceeds zero-mean tolerance {tolerance:.3e}")


class Field:
    """
    Real periodic function sampled on a PeriodicGrid, with a lazily cached rfft.

    Values are stored read-only; ``update`` replaces them and drops the cached spectrum.
    """

    def __init__(self, grid: PeriodicGrid, values, zero_mean_required: bool = False):
        array = np.array(values, dtype=float)
        if array.shape != (grid.n_points,):
            raise GridError(f"expected {grid.n_points} values, got shape {array.shape}")
        array.setflags(write=False)
        self._grid = grid
        self._values = array
        self._spectrum: Optional[np.ndarray] = None
        self._lock = threading.Lock()
        self.zero_mean_required = zero_mean_required
        if zero_mean_required:
            _check_zero_mean(array)

    @classmethod
    def from_function(cls, grid: PeriodicGrid, func: Callable[[np.ndarray], np.ndarray],
                      zero_mean_required: bool = False) -> "Field":
        return cls(grid, func(grid.points), zero_mean_required)

    @classmethod
    def zeros(cls, grid: PeriodicGrid) -> "Field":
        return cls(grid, np.zeros(grid.n_points), zero_mean_required=True)

    @classmethod
    def from_spectrum(cls, grid: PeriodicGrid, spectrum: np.ndarray,
                      zero_mean_required: bool = False) -> "Field":
        spectrum = np.array(spectrum, dtype=complex)
        spectrum[0] = spectrum[0].real
        spectrum[-1] = spectrum[-1].real
        field = cls(grid, np.fft.irfft(spectrum, n=grid.n_points), zero_mean_required)
        spectrum.setflags(write=False)
        field._spectrum = spectrum
        return field

    @property
    def grid(self) -> PeriodicGrid:
        return self._grid

    @property
    def values(self) -> np.ndarray:
        return self._values

    @property
    def spectrum(self) -> np.ndarray:
        with self._lock:
            if self._spectrum is None:
                spectrum = np.fft.rfft(self._values)
                spectrum.setflags(write=False)
                self._spectrum = spectrum
            return self._spectrum

    def update(self, values) -> None:
        array = np.array(values, dtype=float)
        if array.shape != self._values.shape:
            raise GridError(f"expected {self._values.shape[0]} values, got shape {array.shape}")
        if self.zero_mean_required:
            _check_zero_mean(array)
        array.setflags(write=False)
        with self._lock:
            self._values = array
            self._spectrum = None

    def mean(self) -> float:
        return float(np.mean(self._values))

    def max_abs(self) -> float:
        return float(np.max(np.abs(self._values)))

    def is_finite(self) -> bool:
        return bool(np.all(np.isfinite(self._values)))

    # arithmetic results never carry the zero-mean requirement

    def _coerce(self, other) -> np.ndarray:
        if isinstance(other, Field):
            if other.grid != self.grid:
                raise GridError("fields live on different grids")
            return other.values
        return other

    def __add__(self, other) -> "Field":
        return Field(self.grid, self._values + self._coerce(other))

    def __sub__(self, other) -> "Field":
        return Field(self.grid, self._values - self._coerce(other))

    def __mul__(self, other) -> "Field":
        return Field(self.grid, self._values * self._coerce(other))

    __rmul__ = __mul__
    __radd__ = __add__

    def __neg__(self) -> "Field":
        return Field(self.grid, -self._values)

    def __getstate__(self):
        return {"grid": self._grid, "values": self._values, "zero_mean_required": self.zero_mean_required}

    def __setstate__(self, state):
        self.__init__(state["grid"], state["values"], state["zero_mean_required"])

    def __repr__(self) -> str:
        return f"Field(n={self._grid.n_points}, L={self._grid.length:g}, max|f|={self.max_abs():.3e})"


def project_zero_mean(f: Field) -> Field:
    """Subtract the mean. The only place a mean is removed silently."""
    return Field(f.grid, f.values - f.mean(), zero_mean_required=True)


def require_zero_mean(f: Field) -> None:
    _check_zero_mean(f.values)

# -----------------------------------------------------------------------------
# Spectral operators
# -----------------------------------------------------------------------------

def derivative(f: Field, order: int = 1) -> Field:
    """Spectral derivative of the given order; the zero mode is dropped."""
    if order < 1:
        raise ValueError(f"derivative order must be >= 1, got {order}")
    multiplier = (1j * f.grid.wavenumbers) ** order
    spectrum = f.spectrum * multiplier
    spectrum[0] = 0.0
    if order % 2:
        # odd derivatives of the Nyquist mode are not representable
        spectrum[-1] = 0.0
    return Field.from_spectrum(f.grid, spectrum, zero_mean_required=True)


def _hilbert_spectrum(omega: Field) -> np.ndarray:
    spectrum = -1j * omega.spectrum
    spectrum[0] = 0.0
    spectrum[-1] = 0.0
    return spectrum


def hilbert_transform(omega: Field) -> Field:
    """
    Periodic Hilbert transform H w = (1/L) PV int w(y) cot[mu (z - y)] dy.

    Raises:
        ZeroMeanError: if the mean of ``omega`` is above the zero-mean tolerance.
    """
    require_zero_mean(omega)
    return Field.from_spectrum(omega.grid, _hilbert_spectrum(omega), zero_mean_required=True)


def velocity_from_vorticity(omega: Field) -> Field:
    """Zero-mean v with v_z = H w."""
    require_zero_mean(omega)
    k = omega.grid.wavenumbers
    spectrum = _hilbert_spectrum(omega)
    spectrum[1:] = spectrum[1:] / (1j * k[1:])
    return Field.from_spectrum(omega.grid, spectrum, zero_mean_required=True)


def eval_at_points(f: Field, zs) -> np.ndarray:
    """Evaluate the trigonometric interpolant of ``f`` by direct Fourier summation."""
    grid = f.grid
    n = grid.n_points
    s = np.atleast_1d(np.asarray(zs, dtype=float)) - grid.offset
    coeffs = f.spectrum / n
    k = grid.wavenumbers
    phase = np.exp(1j * np.outer(s, k[1:-1]))
    interior = 2.0 * np.real(phase @ coeffs[1:-1])
    nyquist = coeffs[-1].real * np.cos(k[-1] * s)
    return coeffs[0].real + interior + nyquist


def eval_at_point(f: Field, z: float) -> float:
    if not 0.0 <= z < f.grid.length:
        raise ValueError(f"z must lie in [0, L), got {z}")
    return float(eval_at_points(f, [z])[0])


def dealias(f: Field, rule: DealiasRule = DealiasRule.TWO_THIRDS) -> Field:
    """Zero every mode with index above floor(N/3) under the 2/3 rule."""
    if DealiasRule(rule) == DealiasRule.NONE:
        return f
    cutoff = f.grid.n_points // 3
    spectrum = np.array(f.spectrum)
    spectrum[cutoff + 1:] = 0.0
    return Field.from_spectrum(f.grid, spectrum, f.zero_mean_required)


def spectral_tail_fraction(f: Field, band_limit: Optional[int] = None) -> float:
    """
    Fraction of the nonzero-mode energy in the top quarter of the band.

    With ``band_limit`` K the tail is |k| >= 3K/4; the default K = N/2 is the full spectrum.
    """
    n = f.grid.n_points
    band = n // 2 if band_limit is None else int(band_limit)
    energy = mode_weights(n) * np.abs(f.spectrum) ** 2
    total = float(np.sum(energy[1:]))
    if total == 0.0:
        return 0.0
    index = np.arange(energy.size)
    tail = float(np.sum(energy[index >= 0.75 * band]))
    return min(1.0, tail / total)

# -----------------------------------------------------------------------------
# Quadrature oracles
# -----------------------------------------------------------------------------

def _refined_offsets(grid: PeriodicGrid, refine: int):
    """Refined midpoint samples y = z_i + (j + 1/2) h_r around every node z_i."""
    m = grid.n_points * refine
    h_r = grid.length / m
    fine_points = grid.offset + (np.arange(m) + 0.5) * h_r
    rows = (refine * np.arange(grid.n_points))[:, None] + np.arange(m)[None, :]
    return m, h_r, fine_points, rows % m


def pv_hilbert_quadrature(f: Field, refine: int = 4) -> np.ndarray:
    """
    Direct PV quadrature of (1/L) int f(y) cot[mu (z - y)] dy at every grid node.

    Sample points sit symmetrically about the singularity, so the principal value is
    taken by the sum itself.
    """
    grid = f.grid
    m, h_r, fine_points, index = _refined_offsets(grid, refine)
    fine_values = eval_at_points(f, fine_points)
    s = (np.arange(m) + 0.5) * h_r
    kernel = -1.0 / np.tan(grid.mu * s)
    return (h_r / grid.length) * (fine_values[index] @ kernel)


def log_kernel_velocity(omega: Field, refine: int = 4) -> np.ndarray:
    """
    Quadrature of v(z) = (1/pi) int w(y) log|sin mu (z - y)| dy at every grid node.

    The log singularity falls on a cell edge; the missing edge-cell integral is
    restored to leading order.
    """
    grid = omega.grid
    m, h_r, fine_points, index = _refined_offsets(grid, refine)
    fine_values = eval_at_points(omega, fine_points)
    s = (np.arange(m) + 0.5) * h_r
    kernel = np.log(np.abs(np.sin(grid.mu * s)))
    body = h_r * (fine_values[index] @ kernel)
    edge = 2.0 * h_r * (np.log(2.0) - 1.0) * omega.values
    return (body + edge) / np.pi


