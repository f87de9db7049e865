#!/usr/bin/env python3
"""
models.py

Pydantic models for a run configuration. Every model forbids unknown keys and
validates strictly, so a bad document fails with the offending key in the message.
"""

import math
from typing import List, Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from ..integrator import StepControl
from ..models import InitialKind, ModeEntry, ModelKind, ModelSpec, ModelState, make_initial_data
from ..spectral_core import GridLayout, PeriodicGrid, check_grid_size

STRICT = ConfigDict(extra="forbid", strict=True, frozen=True)

DEFAULT_COARSE_M = 64

# ===========================
# Nested sections
# ===========================

class InitialDataSpec(BaseModel):
    model_config = STRICT

    kind: InitialKind
    a: float = 1.0
    modes: List[ModeEntry] = []

    @model_validator(mode="after")
    def _check_amplitude(self) -> "InitialDataSpec":
        if not math.isfinite(self.a):
            raise ValueError(f"a must be finite, got {self.a}")
        if self.kind == InitialKind.PAPER_BLOWUP and self.a <= 0:
            raise ValueError(f"a must be positive for paper_blowup data, got {self.a}")
        return self


class DiagOptions(BaseModel):
    model_config = STRICT

    # None: DEFAULT_COARSE_M, capped at grid_n/2
    coarse_m: Optional[int] = Field(default=None, ge=2)
    uz_floor: float = Field(default=1e-3, gt=0.0, lt=1.0)
    k_max: int = Field(default=4, ge=0, le=8)

# ===========================
# SimConfig
# ===========================

class SimConfig(BaseModel):
    model_config = STRICT

    # Model
    model: ModelKind
    osw_a: Optional[float] = None
    stretching: bool = True

    # Grid
    grid_n: int
    domain_length: float = Field(gt=0.0)
    grid_layout: GridLayout = GridLayout.MIDPOINT

    # Data and horizon
    initial: InitialDataSpec
    t_end: float = Field(ge=0.0)

    # Step control
    cfl: float = Field(default=0.4, gt=0.0, le=1.0)
    dt_max: float = Field(default=1e-2, gt=0.0)
    dt_min: float = Field(default=1e-10, gt=0.0)
    dealias: bool = True
    tail_fraction_limit: float = Field(default=1e-6, gt=0.0, lt=1.0)
    omega_max_limit: float = Field(default=1e8, gt=0.0)

    # Recording
    diag_cadence: int = Field(default=10, ge=1)
    record_interval: Optional[float] = Field(default=None, gt=0.0)
    snapshot_count: int = Field(default=20, ge=0)
    diag_options: DiagOptions = DiagOptions()
    output_dir: str = "output"
    seed: int = 0

    @field_validator("grid_n")
    @classmethod
    def _check_grid_n(cls, value: int) -> int:
        return check_grid_size(value)

    @model_validator(mode="after")
    def _check_consistency(self) -> "SimConfig":
        if self.model == ModelKind.OSW and self.osw_a is None:
            raise ValueError("osw_a is required when model is 'osw'")
        if self.osw_a is not None and not math.isfinite(self.osw_a):
            raise ValueError(f"osw_a must be finite, got {self.osw_a}")
        if self.model == ModelKind.BOUNDARY_SYSTEM and self.grid_layout != GridLayout.MIDPOINT:
            raise ValueError("grid_layout must be 'midpoint' for boundary_system (h2 quadrature)")
        if not self.dt_min < self.dt_max:
            raise ValueError(f"dt_min ({self.dt_min}) must be below dt_max ({self.dt_max})")
        for mode in self.initial.modes:
            if mode.k >= self.grid_n // 2:
                raise ValueError(f"initial.modes entry k={mode.k} is not resolved by grid_n={self.grid_n}")
        coarse_m = self.diag_options.coarse_m
        if coarse_m is not None and coarse_m > self.grid_n // 2:
            raise ValueError(f"diag_options.coarse_m must be at most grid_n/2 = {self.grid_n // 2}")
        return self

    # ---------------------------
    # Derived library objects
    # ---------------------------

    def grid(self) -> PeriodicGrid:
        return PeriodicGrid(n_points=self.grid_n, length=self.domain_length, layout=self.grid_layout)

    def model_spec(self) -> ModelSpec:
        return ModelSpec(kind=self.model, osw_a=self.osw_a, stretching=self.stretching)

    def step_control(self) -> StepControl:
        return StepControl(
            cfl_number=self.cfl,
            dt_max=self.dt_max,
            dt_min=self.dt_min,
            dealias=self.dealias,
            tail_fraction_limit=self.tail_fraction_limit,
            omega_max_limit=self.omega_max_limit,
        )

    def initial_state(self) -> ModelState:
        return make_initial_data(self.initial.kind, self.initial.a, self.grid(), list(self.initial.modes))

    def coarse_samples(self) -> int:
        """Sample count for the D-positivity check."""
        if self.diag_options.coarse_m is not None:
            return self.diag_options.coarse_m
        return min(DEFAULT_COARSE_M, self.grid_n // 2)

    def snapshot_times(self) -> List[float]:
        """Evenly spaced over [0, t_end], both ends included."""
        if self.snapshot_count == 0:
            return []
        if self.snapshot_count == 1:
            return [0.0]
        step = self.t_end / (self.snapshot_count - 1)
        return [i * step for i in range(self.snapshot_count)]

    def echo(self) -> dict:
        return self.model_dump(mode="json")
