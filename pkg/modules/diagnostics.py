#!/usr/bin/env python3
"""
diagnostics.py

Blowup diagnostics for the boundary model: the functionals h1 = -v_z(0, t) and
h2 = mu/L int u cot^2(mu z) dz, the tangent lower bound on h1, the BKM accumulator,
the kernel K and its inequalities, D-positivity, the convexity condition v_zz >= 0,
monotonicity of Q = w / u_z and the characteristics bound on u_z.

DiagnosticsTracker is the per-step callback the integrator drives.
"""

import logging
import math
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict

from .analysis_norms import norm_profile
from .errors import DiagnosticsError, GridError, InequalityViolationError
from .models import ModelState
from .spectral_core import (
    Field,
    GridLayout,
    derivative,
    eval_at_point,
    eval_at_points,
    hilbert_transform,
    spectral_tail_fraction,
    velocity_from_vorticity,
)

logger = logging.getLogger(__name__)

H2_ORIGIN_RTOL = 1e-6
KERNEL_TOLERANCE = 1e-12
LOWER_BOUND_RTOL = 1e-3
INTEGRATED_BOUND_RTOL = 1e-3
SIGN_RTOL = 1e-8
Q_RTOL = 1e-6
Q_RANGE_FLOOR = 1e-2
UZ_RATIO_TOLERANCE = 1e-3

# -----------------------------------------------------------------------------
# Records
# -----------------------------------------------------------------------------

class DiagnosticsRecord(BaseModel):
    model_config = ConfigDict(frozen=True)

    time: float
    h1: float
    h2: float
    H_cum: float
    bkm_integral: float
    m0: float
    lower_bound: float
    max_abs_omega: float
    min_vzz_halfdomain: float
    min_D: float
    min_Qz: float
    uz_bound_ratio: float
    vk_norms: Dict[int, Tuple[float, float]] = {}

    # not written to timeseries.csv
    hilbert_inf: float = 0.0
    bound_applicable: bool = True
    tail_fraction: float = 0.0
    scales: Dict[str, float] = {}


class KernelReport(BaseModel):
    samples: int
    worst_sum_margin: float
    worst_sum_at: float
    worst_reciprocal_margin: float
    worst_reciprocal_at: float
    max_kernel_below_one: float


class BlowupFit(BaseModel):
    t_star_fit: float
    fit_quality: float
    window: int


class InvariantReport(BaseModel):
    records_checked: int
    bound_applicable: bool
    worst_lower_bound_gap: float
    lower_bound_ok: bool
    worst_integrated_gap: float
    integrated_bound_ok: bool
    worst_h2_decrease: float
    h2_monotone: bool
    worst_convexity: float
    convexity_ok: bool
    worst_min_D: float
    d_positive: bool
    worst_min_Qz: float
    q_monotone: bool
    worst_uz_ratio: float
    characteristics_ok: bool

    @property
    def passed(self) -> bool:
        return all((self.lower_bound_ok or not self.bound_applicable, self.integrated_bound_ok,
                    self.h2_monotone, self.convexity_ok, self.d_positive, self.q_monotone,
                    self.characteristics_ok))

# -----------------------------------------------------------------------------
# h1, h2 and the tangent bound
# -----------------------------------------------------------------------------

def compute_h1(state: ModelState) -> float:
    """h1 = -H w(0), evaluated by Fourier summation rather than the singular integral."""
    return -eval_at_point(hilbert_transform(state.omega), 0.0)


def _h2_of(u: Field, u_offset: float) -> float:
    literal = u.values + u_offset
    scale = float(np.max(np.abs(literal)))
    if scale == 0.0:
        return 0.0
    grid = u.grid
    if grid.layout != GridLayout.MIDPOINT:
        raise GridError("h2 needs the midpoint layout; its integrand is singular at z = 0")
    origin = eval_at_point(u, 0.0) + u_offset
    if abs(origin) > H2_ORIGIN_RTOL * scale:
        raise DiagnosticsError(
            f"h2 is ill-defined: literal u(0) = {origin:.3e} is not zero"
        )
    cot_squared = 1.0 / np.tan(grid.mu * grid.points) ** 2
    integral = float(np.sum((literal - origin) * cot_squared)) * grid.spacing
    return grid.mu / grid.length * integral


def compute_h2(state: ModelState, u_offset: Optional[float] = None) -> float:
    """
    h2 = mu/L int u cot^2(mu z) dz for the literal u = stored u + offset.

    The integrand is taken as (u - u(0)) cot^2 on midpoint nodes, which equals the
    literal integral whenever u(0) = 0.

    Raises:
        GridError: on a node-layout grid with nonzero u.
        DiagnosticsError: if the literal u(0) exceeds H2_ORIGIN_RTOL * max|u|.
    """
    offset = state.u_offset if u_offset is None else u_offset
    return _h2_of(state.u, offset)


def c0_from_data(u0: Field, u_offset: float) -> float:
    h2 = _h2_of(u0, u_offset)
    if h2 < -KERNEL_TOLERANCE:
        raise DiagnosticsError(f"initial h2 = {h2:.3e} is negative; data inconsistent")
    return math.sqrt(max(h2, 0.0))


def lower_bound_curve(c0: float, t: float) -> float:
    """2 c0 tan(c0 t / 2), and +inf once c0 t / 2 reaches pi / 2."""
    if t < 0:
        raise ValueError(f"t must be nonnegative, got {t}")
    half_angle = 0.5 * c0 * t
    if half_angle >= 0.5 * math.pi:
        return math.inf
    return 2.0 * c0 * math.tan(half_angle)


def blowup_horizon(c0: float) -> float:
    return math.inf if c0 == 0.0 else math.pi / c0


def horizon_from_amplitude(a: float, length: float) -> float:
    """sqrt(2 pi L / a), the same horizon written in terms of the data."""
    return math.sqrt(2.0 * math.pi * length / a)

# -----------------------------------------------------------------------------
# BKM accumulator
# -----------------------------------------------------------------------------

def _trapezoid(previous_integral: float, previous_value: float, value: float, dt: float) -> float:
    return previous_integral + 0.5 * dt * (previous_value + value)


def bkm_accumulate(prev: DiagnosticsRecord, state: ModelState,
                   dt_elapsed: float) -> Tuple[float, float]:
    """Trapezoid step of int ||H w||_inf dt from ``prev`` to ``state``; returns (integral, m0)."""
    value = hilbert_transform(state.omega).max_abs()
    integral = _trapezoid(prev.bkm_integral, prev.hilbert_inf, value, dt_elapsed)
    return integral, math.exp(integral)

# -----------------------------------------------------------------------------
# Kernel K and its inequalities
# -----------------------------------------------------------------------------

def _log_ratio(w: np.ndarray) -> np.ndarray:
    """log|(w + 1)/(w - 1)| without cancellation on either side of w = 1."""
    w = np.asarray(w, dtype=float)
    below = w < 1.0
    result = np.empty_like(w)
    result[below] = np.log1p(w[below]) - np.log1p(-w[below])
    result[~below] = np.log1p(2.0 / (w[~below] - 1.0))
    return result


def kernel_K(w: float) -> float:
    """
    K = -w log|(w + 1)/(w - 1)| with w = tan(mu y) / tan(mu z).

    Raises:
        DiagnosticsError: for w < 0 or w = 1.
    """
    if w < 0:
        raise DiagnosticsError(f"kernel K is defined for w >= 0, got {w}")
    if w == 1.0:
        raise DiagnosticsError("kernel K is singular at w = 1")
    if w == 0.0:
        return 0.0
    return float(-w * _log_ratio(np.array([w]))[0])


def check_kernel_inequalities(samples: int = 10_000, seed: int = 0) -> KernelReport:
    """
    Check K(w) + K(1/w) + 2 <= 0 for w > 0 and -(1/w) log|(w+1)/(w-1)| <= -2 on (0, 1).

    Raises:
        InequalityViolationError: when a sample breaks either bound by more than 1e-12.
    """
    if samples < 1:
        raise ValueError(f"samples must be >= 1, got {samples}")
    rng = np.random.default_rng(seed)
    half = samples // 2
    w = np.concatenate([
        rng.uniform(0.0, 1.0, size=half),
        rng.uniform(1.0, 100.0, size=samples - half),
        [1e-8, 1.0 - 1e-8, 1.0 + 1e-8, 100.0],
    ])
    w = w[(w > 0.0) & (w != 1.0)]

    kernel = -w * _log_ratio(w)
    reciprocal = -(1.0 / w) * _log_ratio(1.0 / w)
    sums = kernel + reciprocal + 2.0

    small = w < 1.0
    # K(1/w) for w in (0, 1) is -(1/w) log((1 + w)/(1 - w))
    reciprocal_margin = reciprocal[small] + 2.0

    worst_sum = int(np.argmax(sums))
    worst_reciprocal = int(np.argmax(reciprocal_margin))
    report = KernelReport(
        samples=int(w.size),
        worst_sum_margin=float(sums[worst_sum]),
        worst_sum_at=float(w[worst_sum]),
        worst_reciprocal_margin=float(reciprocal_margin[worst_reciprocal]),
        worst_reciprocal_at=float(w[small][worst_reciprocal]),
        max_kernel_below_one=float(np.max(kernel[small])),
    )
    if report.worst_sum_margin > KERNEL_TOLERANCE:
        raise InequalityViolationError(
            f"K(w) + K(1/w) + 2 = {report.worst_sum_margin:.3e} > 0 at w = {report.worst_sum_at:.17g}"
        )
    if report.worst_reciprocal_margin > KERNEL_TOLERANCE:
        raise InequalityViolationError(
            f"-(1/w) log|(w+1)/(w-1)| + 2 = {report.worst_reciprocal_margin:.3e} > 0 "
            f"at w = {report.worst_reciprocal_at:.17g}"
        )
    if report.max_kernel_below_one > KERNEL_TOLERANCE:
        raise InequalityViolationError(f"K(w) = {report.max_kernel_below_one:.3e} > 0 on [0, 1)")
    return report

# -----------------------------------------------------------------------------
# Sign conditions
# -----------------------------------------------------------------------------

def _d_minimum(omega: np.ndarray, u_z: np.ndarray) -> float:
    # D[i, j] = w(z_j) u_y(y_i) - u_z(z_j) w(y_i) on y_i <= z_j
    d = np.outer(u_z, omega) - np.outer(omega, u_z)
    upper = np.triu_indices(omega.size)
    return float(np.min(d[upper]))


def check_D_positivity(state: ModelState, coarse_m: int = 64) -> float:
    """Minimum of D(y, z) = w(z) u_y(y) - u_z(z) w(y) on an m x m sample of 0 <= y <= z <= L/2."""
    if coarse_m < 2 or coarse_m > state.grid.n_points // 2:
        raise ValueError(f"coarse_m must lie in [2, {state.grid.n_points // 2}], got {coarse_m}")
    samples = np.linspace(0.0, 0.5 * state.grid.length, coarse_m)
    omega = eval_at_points(state.omega, samples)
    u_z = eval_at_points(derivative(state.u), samples)
    return _d_minimum(omega, u_z)


def audit_D_positivity(state: ModelState) -> float:
    """Full-resolution D minimum over every pair of grid points in [0, L/2]."""
    z = state.grid.points
    keep = z <= 0.5 * state.grid.length
    return _d_minimum(state.omega.values[keep], derivative(state.u).values[keep])


def _vzz(state: ModelState) -> np.ndarray:
    v = velocity_from_vorticity(state.omega)
    return derivative(v, 2).values[state.grid.half_domain_mask()]


def check_convexity(state: ModelState) -> float:
    """min v_zz over grid points strictly inside (0, L/2)."""
    return float(np.min(_vzz(state)))


def _q_profile(state: ModelState, uz_floor: float) -> np.ndarray:
    if not uz_floor > 0:
        raise ValueError(f"uz_floor must be positive, got {uz_floor}")
    u_z = derivative(state.u).values
    scale = float(np.max(np.abs(u_z)))
    admitted = state.grid.half_domain_mask() & (u_z > uz_floor * scale)
    if scale == 0.0 or np.count_nonzero(admitted) < 2:
        raise DiagnosticsError("Q = w / u_z has fewer than 2 admitted points")
    return state.omega.values[admitted] / u_z[admitted]


def check_Q_monotonicity(state: ModelState, uz_floor: float = 1e-3) -> float:
    """Minimum forward difference of Q = w / u_z over admitted points of (0, L/2)."""
    return float(np.min(np.diff(_q_profile(state, uz_floor))))


def check_uz_characteristics_bound(record: DiagnosticsRecord, u0z_inf: float,
                                   uz_inf_now: float) -> float:
    """||u_z(t)||_inf / (m0 ||u0_z||_inf); zero data gives 0."""
    if u0z_inf == 0.0:
        return 0.0
    return uz_inf_now / (record.m0 * u0z_inf)

# -----------------------------------------------------------------------------
# Blowup-time extrapolation
# -----------------------------------------------------------------------------

def estimate_blowup_time(records: Sequence[DiagnosticsRecord]) -> BlowupFit:
    """
    Fit 1 / max|w| linearly in t over the last quarter of the records.

    Raises:
        DiagnosticsError: with fewer than 8 records or a non-increasing tail.
    """
    if len(records) < 8:
        raise DiagnosticsError(f"blowup fit needs at least 8 records, got {len(records)}")
    window = max(3, math.ceil(len(records) / 4))
    tail = records[-window:]
    t = np.array([r.time for r in tail])
    peak = np.array([r.max_abs_omega for r in tail])
    if np.any(np.diff(peak) <= 0) or np.any(peak <= 0):
        raise DiagnosticsError("blowup fit unavailable: max|w| is not increasing in the final window")

    inverse = 1.0 / peak
    slope, intercept = np.polyfit(t, inverse, 1)
    if slope >= 0:
        raise DiagnosticsError("blowup fit unavailable: 1/max|w| does not decrease")
    residual = inverse - (slope * t + intercept)
    spread = float(np.sum((inverse - inverse.mean()) ** 2))
    quality = 1.0 - float(np.sum(residual ** 2)) / spread if spread > 0 else 0.0
    return BlowupFit(t_star_fit=float(-intercept / slope), fit_quality=quality, window=window)

# -----------------------------------------------------------------------------
# Tracker
# -----------------------------------------------------------------------------

class DiagnosticsTracker:
    """
    Callable handed to integrator.run. Accumulates the BKM integral and H_cum at every
    step and assembles a DiagnosticsRecord when the run asks for one.
    """

    def __init__(self, initial: ModelState, coarse_m: int = 64, uz_floor: float = 1e-3,
                 k_max: int = 4, band_limit: Optional[int] = None):
        n = initial.grid.n_points
        self.coarse_m = min(coarse_m, n // 2)
        self.uz_floor = uz_floor
        self.k_max = min(k_max, n // 4)
        self.band_limit = band_limit
        self.h2_defined = True
        try:
            self.c0 = c0_from_data(initial.u, initial.u_offset)
        except (DiagnosticsError, GridError) as exc:
            logger.warning(f"h2 is not available for this data: {exc}")
            self.h2_defined = False
            self.c0 = math.nan
        self.u0z_inf = derivative(initial.u).max_abs()
        self.bkm_integral = 0.0
        self.H_cum = 0.0
        self.bound_applicable = True
        self._last_hilbert_inf = hilbert_transform(initial.omega).max_abs()
        self._last_h2 = self._h2(initial)

    def __call__(self, state: ModelState, dt: float, emit: bool) -> Optional[DiagnosticsRecord]:
        hilbert_inf = hilbert_transform(state.omega).max_abs()
        h2 = self._h2(state)
        if dt > 0:
            self.bkm_integral = _trapezoid(self.bkm_integral, self._last_hilbert_inf, hilbert_inf, dt)
            self.H_cum = _trapezoid(self.H_cum, self._last_h2, h2, dt)
        self._last_hilbert_inf = hilbert_inf
        self._last_h2 = h2
        if not emit:
            return None
        return self._record(state, h2, hilbert_inf)

    def _h2(self, state: ModelState) -> float:
        if not self.h2_defined:
            return math.nan
        try:
            return compute_h2(state)
        except DiagnosticsError as exc:
            logger.warning(f"h2 lost at t={state.time:.6g}: {exc}")
            self.h2_defined = False
            return math.nan

    def _record(self, state: ModelState, h2: float, hilbert_inf: float) -> DiagnosticsRecord:
        u_z = derivative(state.u)
        max_omega = state.omega.max_abs()
        vzz = _vzz(state)
        d_scale = max_omega * u_z.max_abs()
        min_d = check_D_positivity(state, self.coarse_m)
        if self.bound_applicable and min_d < -SIGN_RTOL * d_scale:
            self.bound_applicable = False
            logger.warning(
                f"D-positivity fails at t={state.time:.6g} (min_D={min_d:.3e}); "
                "the tangent lower bound is conditionally inapplicable from here on"
            )

        try:
            q = _q_profile(state, self.uz_floor)
            min_qz = float(np.min(np.diff(q)))
            # a nearly constant Q is judged against its size, not its vanishing spread
            q_range = max(float(np.max(q) - np.min(q)), Q_RANGE_FLOOR * float(np.max(np.abs(q))))
        except DiagnosticsError:
            logger.debug(f"No Q support at t={state.time:.6g}; recording min_Qz = 0")
            min_qz, q_range = 0.0, 0.0

        m0 = math.exp(self.bkm_integral)
        profile = norm_profile(state, self.k_max)
        record = DiagnosticsRecord(
            time=state.time,
            h1=compute_h1(state),
            h2=h2,
            H_cum=self.H_cum,
            bkm_integral=self.bkm_integral,
            m0=m0,
            lower_bound=lower_bound_curve(self.c0, state.time),
            max_abs_omega=max_omega,
            min_vzz_halfdomain=float(np.min(vzz)),
            min_D=min_d,
            min_Qz=min_qz,
            uz_bound_ratio=0.0,
            vk_norms={k: (profile.vk_u[k], profile.vk_omega[k]) for k in range(profile.k_max + 1)},
            hilbert_inf=hilbert_inf,
            bound_applicable=self.bound_applicable,
            tail_fraction=spectral_tail_fraction(state.omega, self.band_limit),
            scales={"vzz": float(np.max(np.abs(vzz))), "D": d_scale, "Q": q_range},
        )
        ratio = check_uz_characteristics_bound(record, self.u0z_inf, u_z.max_abs())
        record = record.model_copy(update={"uz_bound_ratio": ratio})
        logger.debug(
            f"t={record.time:.6g} h1={record.h1:.6g} h2={record.h2:.6g} "
            f"max|w|={record.max_abs_omega:.6g} tail={record.tail_fraction:.2e}"
        )
        return record

# -----------------------------------------------------------------------------
# Invariant summary
# -----------------------------------------------------------------------------

def check_blowup_invariants(records: Sequence[DiagnosticsRecord]) -> InvariantReport:
    """Worst margins of the blowup inequalities over a record list."""
    if not records:
        raise DiagnosticsError("no records to check")

    lower_gaps: List[float] = []
    lower_ok = True
    integrated_gaps: List[float] = []
    integrated_ok = True
    convexity: List[float] = []
    convexity_ok = True
    d_values: List[float] = []
    d_ok = True
    q_values: List[float] = []
    q_ok = True
    ratios: List[float] = []

    for record in records:
        bound = record.lower_bound
        if record.bound_applicable and math.isfinite(bound):
            gap = record.h1 - bound
            lower_gaps.append(gap)
            lower_ok &= gap >= -LOWER_BOUND_RTOL * (1.0 + bound)
        if math.isfinite(record.H_cum):
            gap = record.h1 - record.H_cum
            integrated_gaps.append(gap)
            integrated_ok &= gap >= -INTEGRATED_BOUND_RTOL * (1.0 + abs(record.H_cum))
        scales = record.scales
        convexity.append(record.min_vzz_halfdomain)
        convexity_ok &= record.min_vzz_halfdomain >= -SIGN_RTOL * scales.get("vzz", 0.0)
        d_values.append(record.min_D)
        d_ok &= record.min_D >= -SIGN_RTOL * scales.get("D", 0.0)
        q_values.append(record.min_Qz)
        q_ok &= record.min_Qz >= -Q_RTOL * scales.get("Q", 0.0)
        ratios.append(record.uz_bound_ratio)

    # h2 is NaN once it becomes ill-defined; only the defined prefix is checked
    h2 = np.array([r.h2 for r in records])
    h2 = h2[np.isfinite(h2)]
    h2_drops = np.diff(h2) if h2.size > 1 else np.zeros(1)
    worst_drop = float(np.min(h2_drops))
    h2_ok = worst_drop >= -SIGN_RTOL * (1.0 + float(np.max(np.abs(h2)) if h2.size else 0.0))

    return InvariantReport(
        records_checked=len(records),
        bound_applicable=bool(records[-1].bound_applicable),
        worst_lower_bound_gap=min(lower_gaps) if lower_gaps else 0.0,
        lower_bound_ok=bool(lower_ok),
        worst_integrated_gap=min(integrated_gaps) if integrated_gaps else 0.0,
        integrated_bound_ok=bool(integrated_ok),
        worst_h2_decrease=worst_drop,
        h2_monotone=bool(h2_ok),
        worst_convexity=min(convexity),
        convexity_ok=bool(convexity_ok),
        worst_min_D=min(d_values),
        d_positive=bool(d_ok),
        worst_min_Qz=min(q_values),
        q_monotone=bool(q_ok),
        worst_uz_ratio=max(ratios),
        characteristics_ok=bool(max(ratios) <= 1.0 + UZ_RATIO_TOLERANCE),
    )
