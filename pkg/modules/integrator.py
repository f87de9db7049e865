#!/usr/bin/env python3
"""
integrator.py

Classical RK4 time stepping with CFL step selection and the run loop that stops on
resolution loss, amplitude growth, step-size collapse or overflow.
"""

import logging
import time as wallclock
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Any, Callable, Dict, List, Optional, Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict, Field as PydanticField, model_validator
from tqdm import tqdm

from .errors import NumericalOverflowError
from .models import ModelKind, ModelSpec, ModelState, evaluate_rhs
from .spectral_core import (
    DealiasRule,
    hilbert_transform,
    project_zero_mean,
    spectral_tail_fraction,
    velocity_from_vorticity,
)

logger = logging.getLogger(__name__)

OMEGA_MEAN_DRIFT = 1e-13
VELOCITY_FLOOR = 1e-12

# -----------------------------------------------------------------------------
# Step control and run output
# -----------------------------------------------------------------------------

class StepControl(BaseModel):
    model_config = ConfigDict(frozen=True)

    cfl_number: float = PydanticField(default=0.4, gt=0.0, le=1.0)
    dt_max: float = PydanticField(default=1e-2, gt=0.0)
    dt_min: float = PydanticField(default=1e-10, gt=0.0)
    dealias: bool = True
    tail_fraction_limit: float = PydanticField(default=1e-6, gt=0.0, lt=1.0)
    omega_max_limit: float = PydanticField(default=1e8, gt=0.0)

    @model_validator(mode="after")
    def _check_dt_range(self) -> "StepControl":
        if not self.dt_min < self.dt_max:
            raise ValueError(f"dt_min ({self.dt_min}) must be below dt_max ({self.dt_max})")
        return self

    @property
    def rule(self) -> DealiasRule:
        return DealiasRule.TWO_THIRDS if self.dealias else DealiasRule.NONE


class TerminationReason(str, Enum):
    T_END = "t_end"
    RESOLUTION_LOST = "resolution_lost"
    AMPLITUDE_LIMIT = "amplitude_limit"
    DT_FLOOR = "dt_floor"
    OVERFLOW = "overflow"

    @property
    def is_physical(self) -> bool:
        return self in (TerminationReason.T_END, TerminationReason.RESOLUTION_LOST,
                        TerminationReason.AMPLITUDE_LIMIT)


@dataclass
class Snapshot:
    """Grid values at one record time; ``u`` is the literal u (offset added back)."""

    time: float
    z: np.ndarray
    u: np.ndarray
    omega: np.ndarray
    v: np.ndarray

    @classmethod
    def capture(cls, state: ModelState) -> "Snapshot":
        v = velocity_from_vorticity(state.omega)
        return cls(
            time=state.time,
            z=np.array(state.grid.points),
            u=state.u.values + state.u_offset,
            omega=np.array(state.omega.values),
            v=np.array(v.values),
        )


@dataclass
class RunOutput:
    final_state: ModelState
    termination_reason: TerminationReason
    records: List[Any] = field(default_factory=list)
    snapshots: List[Snapshot] = field(default_factory=list)
    steps: int = 0
    wall_time_seconds: float = 0.0
    config_echo: Optional[Dict[str, Any]] = None
    summary: Optional[Dict[str, Any]] = None

    @property
    def exit_ok(self) -> bool:
        return self.termination_reason.is_physical


# (state, dt just taken, emit a full record?) -> record or None
DiagnosticsHook = Callable[[ModelState, float, bool], Optional[Any]]

# -----------------------------------------------------------------------------
# Single steps
# -----------------------------------------------------------------------------

def _stage(state: ModelState, spec: ModelSpec, rule: DealiasRule):
    du, domega = evaluate_rhs(state, spec, rule)
    if not (du.is_finite() and domega.is_finite()):
        raise NumericalOverflowError(f"non-finite right-hand side at t={state.time:.6g}")
    return du, domega


def _shifted(state: ModelState, spec: ModelSpec, slope, factor: float) -> ModelState:
    u = state.u + factor * slope[0]
    omega = state.omega + factor * slope[1]
    if not spec.conserves_mean:
        omega = project_zero_mean(omega)
    return ModelState(u=u, omega=omega, time=state.time, u_offset=state.u_offset)


def rk4_step(state: ModelState, spec: ModelSpec, dt: float,
             rule: DealiasRule = DealiasRule.TWO_THIRDS) -> ModelState:
    """
    Advance one classical RK4 step.

    Raises:
        NumericalOverflowError: if any stage or the result holds NaN or Inf.
    """
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt}")

    k1 = _stage(state, spec, rule)
    k2 = _stage(_shifted(state, spec, k1, 0.5 * dt), spec, rule)
    k3 = _stage(_shifted(state, spec, k2, 0.5 * dt), spec, rule)
    k4 = _stage(_shifted(state, spec, k3, dt), spec, rule)

    weight = dt / 6.0
    u = state.u + weight * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0])
    omega = state.omega + weight * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1])
    if not (u.is_finite() and omega.is_finite()):
        raise NumericalOverflowError(f"non-finite state after step at t={state.time + dt:.6g}")

    drift = omega.mean()
    if not spec.conserves_mean or abs(drift) > OMEGA_MEAN_DRIFT:
        if spec.conserves_mean:
            logger.debug(f"Re-projecting omega mean drift {drift:.3e} at t={state.time + dt:.6g}")
        omega = project_zero_mean(omega)
    return ModelState(u=u, omega=omega, time=state.time + dt, u_offset=state.u_offset)


def _advection_speed(state: ModelState, spec: Optional[ModelSpec]) -> float:
    if spec is not None and spec.kind == ModelKind.CCF:
        return hilbert_transform(state.omega).max_abs()
    return velocity_from_vorticity(state.omega).max_abs()


def choose_dt(state: ModelState, control: StepControl, spec: Optional[ModelSpec] = None) -> float:
    """dt = min(dt_max, cfl * dz / max(max|v|, 1e-12)); may fall below dt_min."""
    speed = max(_advection_speed(state, spec), VELOCITY_FLOOR)
    return min(control.dt_max, control.cfl_number * state.grid.spacing / speed)


def integrate_fixed(state: ModelState, spec: ModelSpec, dt: float, n_steps: int,
                    dealias: bool = True,
                    observer: Optional[Callable[[ModelState], None]] = None) -> ModelState:
    """Take ``n_steps`` RK4 steps of size ``dt``; ``observer`` sees every new state."""
    rule = DealiasRule.TWO_THIRDS if dealias else DealiasRule.NONE
    t0 = state.time
    for step in range(1, n_steps + 1):
        state = rk4_step(state, spec, dt, rule)
        # clock is t0 + step*dt, not a running sum
        state = replace(state, time=t0 + step * dt)
        if observer is not None:
            observer(state)
    return state

# -----------------------------------------------------------------------------
# Run loop
# -----------------------------------------------------------------------------

def _tail_band(state: ModelState, control: StepControl) -> Optional[int]:
    return state.grid.n_points // 3 if control.dealias else None


def run(initial: ModelState, spec: ModelSpec, control: StepControl, t_end: float,
        hooks: Optional[DiagnosticsHook] = None,
        diag_cadence: int = 10,
        record_interval: Optional[float] = None,
        snapshot_times: Sequence[float] = (),
        progress: bool = False) -> RunOutput:
    """
    Integrate from ``initial`` until ``t_end`` or a termination trigger.

    Records are emitted at t0, every ``diag_cadence`` steps (or on the multiples of
    ``record_interval`` when given) and at t_end. ``hooks`` is called after every step
    so time integrals accumulate at step resolution. Snapshots are taken at the first
    record at or after each entry of ``snapshot_times``.
    """
    if t_end < initial.time:
        raise ValueError(f"t_end ({t_end}) is before the initial time ({initial.time})")
    if diag_cadence < 1:
        raise ValueError(f"diag_cadence must be >= 1, got {diag_cadence}")
    if record_interval is not None and not record_interval > 0:
        raise ValueError(f"record_interval must be positive, got {record_interval}")

    started = wallclock.perf_counter()
    if t_end == initial.time:
        return RunOutput(final_state=initial, termination_reason=TerminationReason.T_END)

    logger.info(
        f"Starting run: model={spec.kind.value} N={initial.grid.n_points} "
        f"L={initial.grid.length:g} t0={initial.time:g} t_end={t_end:g}"
    )

    records: List[Any] = []
    snapshots: List[Snapshot] = []
    pending_snapshots = sorted(float(t) for t in snapshot_times)
    time_eps = 1e-12 * max(1.0, abs(t_end))
    band = _tail_band(initial, control)

    def emit(state: ModelState, dt: float, full: bool) -> None:
        record = hooks(state, dt, full) if hooks is not None else None
        if not full:
            return
        if record is not None:
            records.append(record)
        taken = False
        while pending_snapshots and pending_snapshots[0] <= state.time + time_eps:
            pending_snapshots.pop(0)
            if not taken:
                snapshots.append(Snapshot.capture(state))
                taken = True

    state = initial
    emit(state, 0.0, True)

    steps = 0
    next_mark = 1
    reason = TerminationReason.T_END
    with tqdm(total=t_end - initial.time, disable=not progress, desc=spec.kind.value,
              unit="t", leave=False) as bar:
        while True:
            dt = choose_dt(state, control, spec)
            if dt < control.dt_min:
                logger.warning(f"Step size {dt:.3e} below dt_min at t={state.time:.6g}")
                reason = TerminationReason.DT_FLOOR
                break

            boundary = t_end
            if record_interval is not None:
                boundary = min(t_end, initial.time + next_mark * record_interval)
            landed = state.time + dt >= boundary - time_eps
            if landed:
                dt = boundary - state.time

            try:
                new_state = rk4_step(state, spec, dt, control.rule)
            except NumericalOverflowError as exc:
                logger.warning(f"Overflow: {exc}")
                reason = TerminationReason.OVERFLOW
                break
            if landed:
                new_state = replace(new_state, time=boundary)
            state = new_state
            steps += 1
            bar.update(dt)

            reached_end = landed and boundary == t_end
            if record_interval is not None:
                full = landed
                if landed:
                    next_mark += 1
            else:
                full = steps % diag_cadence == 0 or reached_end
            emit(state, dt, full)

            if reached_end:
                reason = TerminationReason.T_END
                break
            if spectral_tail_fraction(state.omega, band) > control.tail_fraction_limit:
                reason = TerminationReason.RESOLUTION_LOST
                break
            if state.omega.max_abs() > control.omega_max_limit:
                reason = TerminationReason.AMPLITUDE_LIMIT
                break

    elapsed = wallclock.perf_counter() - started
    logger.info(
        f"Run finished: reason={reason.value} t={state.time:.6g} steps={steps} "
        f"records={len(records)} wall={elapsed:.2f}s"
    )
    return RunOutput(
        final_state=state,
        termination_reason=reason,
        records=records,
        snapshots=snapshots,
        steps=steps,
        wall_time_seconds=elapsed,
    )
