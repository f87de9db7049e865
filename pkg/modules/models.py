#!/usr/bin/env python3
"""
models.py

Right-hand sides for the 1D boundary model

    u_t + v u_z = 0,    w_t + v w_z = u_z,    v_z = H w,

and for the scalar family w_t + a v w_x - v_x w = 0 (CLM at a = 0, De Gregorio at
a = 1) together with the CCF transport equation theta_t + theta_x H theta = 0.
Also holds initial data, the closed-form CLM solution and symmetry utilities.
"""

import logging
from dataclasses import dataclass, replace
from enum import Enum
from typing import List, Literal, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field as PydanticField, model_validator

from .errors import BlowupProximityError, GridError
from .spectral_core import (
    DealiasRule,
    Field,
    PeriodicGrid,
    dealias,
    derivative,
    hilbert_transform,
    project_zero_mean,
    require_zero_mean,
    velocity_from_vorticity,
)

logger = logging.getLogger(__name__)

CLM_DENOMINATOR_FLOOR = 1e-8

# -----------------------------------------------------------------------------
# Model specification and state
# -----------------------------------------------------------------------------

class ModelKind(str, Enum):
    BOUNDARY_SYSTEM = "boundary_system"
    CLM = "clm"
    DE_GREGORIO = "de_gregorio"
    CCF = "ccf"
    OSW = "osw"


class ModelSpec(BaseModel):
    model_config = ConfigDict(frozen=True)

    kind: ModelKind
    osw_a: Optional[float] = None
    stretching: bool = True  # False gives the large-a limit w_t + v w_x = 0

    @model_validator(mode="after")
    def _check_osw(self) -> "ModelSpec":
        if self.kind == ModelKind.OSW:
            if self.osw_a is None:
                raise ValueError("osw_a is required when kind is 'osw'")
            if not np.isfinite(self.osw_a):
                raise ValueError(f"osw_a must be finite, got {self.osw_a}")
        return self

    @property
    def is_scalar(self) -> bool:
        return self.kind != ModelKind.BOUNDARY_SYSTEM

    @property
    def convection_coefficient(self) -> Optional[float]:
        if self.kind == ModelKind.CLM:
            return 0.0
        if self.kind == ModelKind.DE_GREGORIO:
            return 1.0
        if self.kind == ModelKind.OSW:
            return float(self.osw_a)
        return None

    @property
    def conserves_mean(self) -> bool:
        # mean(theta_x H theta) = -sum |k| |theta_k|^2, so CCF drifts in the mean
        return self.kind != ModelKind.CCF


@dataclass(frozen=True)
class ModelState:
    """
    The pair (u, w) at time t on one grid.

    ``u_offset`` is the constant removed from paper_blowup data to keep u in the zero-mean
    space; the literal u is ``u + u_offset``.
    """

    u: Field
    omega: Field
    time: float = 0.0
    u_offset: float = 0.0

    def __post_init__(self):
        if self.u.grid != self.omega.grid:
            raise GridError("u and omega must share one grid")
        require_zero_mean(self.omega)

    @property
    def grid(self) -> PeriodicGrid:
        return self.u.grid


class InitialKind(str, Enum):
    PAPER_BLOWUP = "paper_blowup"
    CUSTOM_MODES = "custom_modes"


class ModeEntry(BaseModel):
    """One Fourier mode of custom initial data: cos*cos(k' z) + sin*sin(k' z)."""

    model_config = ConfigDict(extra="forbid", strict=True)

    target: Literal["u", "omega"]
    k: int = PydanticField(ge=1)
    cos: float = 0.0
    sin: float = 0.0

# -----------------------------------------------------------------------------
# Right-hand sides
# -----------------------------------------------------------------------------

def boundary_system_rhs(state: ModelState,
                        rule: DealiasRule = DealiasRule.TWO_THIRDS) -> Tuple[Field, Field]:
    """
    Time derivatives of the boundary model.

    Returns:
        (du_dt, domega_dt) = (-v u_z, -v w_z + u_z) with the products dealiased.
    """
    v = velocity_from_vorticity(state.omega)
    u_z = derivative(state.u)
    omega_z = derivative(state.omega)
    du_dt = -dealias(v * u_z, rule)
    domega_dt = u_z - dealias(v * omega_z, rule)
    return du_dt, domega_dt


def scalar_rhs(field: Field, spec: ModelSpec,
               rule: DealiasRule = DealiasRule.TWO_THIRDS) -> Field:
    """
    Time derivative of a scalar model.

    For clm / de_gregorio / osw this is -a v w_x + v_x w with v_x = H w (the stretching
    term is dropped when ``spec.stretching`` is False); for ccf it is -theta_x H theta.
    """
    if not spec.is_scalar:
        raise ValueError("scalar_rhs does not handle the boundary system")
    require_zero_mean(field)

    if spec.kind == ModelKind.CCF:
        return -dealias(derivative(field) * hilbert_transform(field), rule)

    a = spec.convection_coefficient
    rhs = Field(field.grid, np.zeros(field.grid.n_points))
    if a != 0.0:
        v = velocity_from_vorticity(field)
        rhs = rhs - a * dealias(v * derivative(field), rule)
    if spec.stretching:
        rhs = rhs + dealias(hilbert_transform(field) * field, rule)
    return rhs


def evaluate_rhs(state: ModelState, spec: ModelSpec,
                 rule: DealiasRule = DealiasRule.TWO_THIRDS) -> Tuple[Field, Field]:
    if spec.is_scalar:
        return Field.zeros(state.grid), scalar_rhs(state.omega, spec, rule)
    return boundary_system_rhs(state, rule)

# -----------------------------------------------------------------------------
# Closed-form CLM solution
# -----------------------------------------------------------------------------

def clm_exact_solution(omega0: Field, t: float) -> Field:
    """
    w(x, t) = 4 w0 / ([2 - t H w0]^2 + t^2 w0^2).

    Raises:
        BlowupProximityError: if the denominator drops below 1e-8 on the grid.
    """
    h = hilbert_transform(omega0).values
    w0 = omega0.values
    denominator = (2.0 - t * h) ** 2 + (t * w0) ** 2
    min_denominator = float(np.min(denominator))
    if min_denominator < CLM_DENOMINATOR_FLOOR:
        raise BlowupProximityError(
            f"CLM denominator {min_denominator:.3e} below {CLM_DENOMINATOR_FLOOR:g} at t={t}",
            min_denominator,
        )
    return Field(omega0.grid, 4.0 * w0 / denominator)

# -----------------------------------------------------------------------------
# Initial data and symmetry
# -----------------------------------------------------------------------------

def _modes_to_values(grid: PeriodicGrid, modes: Sequence[ModeEntry], target: str) -> np.ndarray:
    z = grid.points
    values = np.zeros(grid.n_points)
    for mode in modes:
        if mode.target != target:
            continue
        if mode.k >= grid.n_points // 2:
            raise ValueError(f"mode k={mode.k} is not resolved on a grid of {grid.n_points} points")
        phase = 2.0 * np.pi * mode.k / grid.length * z
        values += mode.cos * np.cos(phase) + mode.sin * np.sin(phase)
    return values


def make_initial_data(kind: InitialKind, amplitude: float, grid: PeriodicGrid,
                      modes: Optional[List[ModeEntry]] = None) -> ModelState:
    """
    Build the initial state.

    paper_blowup gives u0 = a sin^2(mu z) - a/2 (offset a/2 recorded) and w0 = 0;
    custom_modes scales a band-limited mode table by ``amplitude``.
    """
    kind = InitialKind(kind)
    if not np.isfinite(amplitude):
        raise ValueError(f"amplitude must be finite, got {amplitude}")

    if kind == InitialKind.PAPER_BLOWUP:
        if amplitude <= 0:
            raise ValueError(f"paper_blowup requires amplitude a > 0, got {amplitude}")
        raw_u = Field.from_function(grid, lambda z: amplitude * np.sin(grid.mu * z) ** 2)
        return ModelState(u=project_zero_mean(raw_u), omega=Field.zeros(grid),
                          time=0.0, u_offset=0.5 * amplitude)

    modes = modes or []
    u = Field(grid, amplitude * _modes_to_values(grid, modes, "u"))
    omega = Field(grid, amplitude * _modes_to_values(grid, modes, "omega"))
    return ModelState(u=project_zero_mean(u), omega=project_zero_mean(omega))


def symmetry_error(state: ModelState) -> Tuple[float, float]:
    """Max deviation of u from its even part and of w from its odd part under z -> -z."""
    reflect = state.grid.reflection_index()
    u = state.u.values
    omega = state.omega.values
    u_even_err = float(np.max(np.abs(0.5 * (u - u[reflect]))))
    omega_odd_err = float(np.max(np.abs(0.5 * (omega + omega[reflect]))))
    return u_even_err, omega_odd_err


def time_reversed(state: ModelState) -> ModelState:
    """(u, w) -> (u, -w): running the result forward retraces the original backward."""
    return replace(state, omega=-state.omega)
