#!/usr/bin/env python3
"""
selftest.py

Numerical self-checks run by the ``selftest`` command: Hilbert transform oracles and
identities, the kernel inequalities, embedding constants, mollifier properties and the
closed-form CLM regression. Each suite returns a SuiteResult; a suite that raises is
recorded as failed with the exception text.
"""

import logging
import math
import time
from typing import Callable, List, Optional

import numpy as np
from pydantic import BaseModel

from .analysis_norms import (
    banach_algebra_ratio,
    mollify,
    sharp_sobolev_constant,
    verify_poincare,
    verify_sobolev_embedding,
    vk_norm,
)
from .diagnostics import check_kernel_inequalities
from .errors import SimulationError
from .integrator import integrate_fixed
from .models import ModelKind, ModelSpec, ModelState, clm_exact_solution
from .spectral_core import (
    Field,
    GridLayout,
    PeriodicGrid,
    derivative,
    hilbert_transform,
    pv_hilbert_quadrature,
)

logger = logging.getLogger(__name__)

HILBERT_EXACT_TOL = 1e-12
HILBERT_QUADRATURE_RTOL = 1e-8
INVARIANT_RTOL = 1e-10
CONSTANT_TOL = 1e-10
CLM_ORACLE_TOL = 1e-8
JACKSON_LEVELS = (16, 32, 64, 128)


class SuiteResult(BaseModel):
    name: str
    passed: bool
    worst: Optional[float] = None
    tolerance: Optional[float] = None
    detail: str = ""
    seconds: float = 0.0


class SelftestReport(BaseModel):
    suites: List[SuiteResult]

    @property
    def passed(self) -> bool:
        return all(suite.passed for suite in self.suites)


def random_band_limited_field(grid: PeriodicGrid, rng: np.random.Generator,
                              max_mode: Optional[int] = None) -> Field:
    """Zero-mean trigonometric polynomial with Gaussian coefficients on modes 1..max_mode."""
    max_mode = max_mode or grid.n_points // 8
    k = np.arange(1, max_mode + 1)
    phase = 2.0 * np.pi / grid.length * np.outer(grid.points, k)
    a = rng.standard_normal(max_mode)
    b = rng.standard_normal(max_mode)
    return Field(grid, np.cos(phase) @ a + np.sin(phase) @ b, zero_mean_required=True)

# -----------------------------------------------------------------------------
# Suites
# -----------------------------------------------------------------------------

def hilbert_oracle_suite(n_fields: int = 100, seed: int = 0) -> SuiteResult:
    grid = PeriodicGrid(n_points=64, length=2.0 * np.pi, layout=GridLayout.MIDPOINT)
    k2 = 2.0 * grid.mu
    sine = Field.from_function(grid, lambda z: np.sin(k2 * z))
    cosine = Field.from_function(grid, lambda z: np.cos(k2 * z))
    exact = max(
        float(np.max(np.abs(hilbert_transform(sine).values + np.cos(k2 * grid.points)))),
        float(np.max(np.abs(hilbert_transform(cosine).values - np.sin(k2 * grid.points)))),
    )
    if exact > HILBERT_EXACT_TOL:
        return SuiteResult(name="hilbert_oracle", passed=False, worst=exact, tolerance=HILBERT_EXACT_TOL,
                           detail="H(sin 2mu z) / H(cos 2mu z) off the exact values")

    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n_fields):
        f = random_band_limited_field(grid, rng)
        spectral = hilbert_transform(f).values
        quadrature = pv_hilbert_quadrature(f)
        scale = max(1.0, float(np.max(np.abs(quadrature))))
        worst = max(worst, float(np.max(np.abs(spectral - quadrature))) / scale)
    return SuiteResult(name="hilbert_oracle", passed=worst <= HILBERT_QUADRATURE_RTOL, worst=worst,
                       tolerance=HILBERT_QUADRATURE_RTOL,
                       detail=f"exact modes within {exact:.1e}; {n_fields} fields against PV quadrature")


def hilbert_invariants_suite(n_fields: int = 1000, seed: int = 1) -> SuiteResult:
    """Isometry, commutation with d/dz and H^2 = -I on band-limited zero-mean data."""
    grid = PeriodicGrid(n_points=64, length=2.0 * np.pi)
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n_fields):
        f = random_band_limited_field(grid, rng)
        hf = hilbert_transform(f)
        scale = max(1.0, f.max_abs())
        isometry = abs(vk_norm(hf, 0) - vk_norm(f, 0)) / max(1.0, vk_norm(f, 0))
        commutation = (hilbert_transform(derivative(f)) - derivative(hf)).max_abs() / max(1.0, derivative(f).max_abs())
        involution = (hilbert_transform(hf) + f).max_abs() / scale
        worst = max(worst, isometry, commutation, involution)
    return SuiteResult(name="hilbert_invariants", passed=worst <= INVARIANT_RTOL, worst=worst,
                       tolerance=INVARIANT_RTOL, detail=f"{n_fields} fields")


def kernel_suite(samples: int = 10_000) -> SuiteResult:
    report = check_kernel_inequalities(samples=samples)
    worst = max(report.worst_sum_margin, report.worst_reciprocal_margin, report.max_kernel_below_one)
    return SuiteResult(
        name="kernel_inequalities", passed=True, worst=worst, tolerance=1e-12,
        detail=f"{report.samples} samples; K(w)+K(1/w)+2 worst {report.worst_sum_margin:.3e} "
               f"at w={report.worst_sum_at:.6g}",
    )


def constants_suite(n_fields: int = 1000, lengths=(np.pi, 2.0 * np.pi, 10.0), seed: int = 2) -> SuiteResult:
    """Poincare and Sobolev margins must stay above -1e-10; the algebra ratio below 2 sqrt(L/12)."""
    rng = np.random.default_rng(seed)
    worst = math.inf
    algebra = 0.0
    for length in lengths:
        grid = PeriodicGrid(n_points=64, length=float(length))
        algebra_bound = 2.0 * sharp_sobolev_constant(grid.length)
        for _ in range(n_fields):
            f = random_band_limited_field(grid, rng)
            worst = min(worst, verify_poincare(f, 1, 0), verify_poincare(f, 2, 1),
                        verify_sobolev_embedding(f))
            g = random_band_limited_field(grid, rng)
            algebra = max(algebra, banach_algebra_ratio(f, g) / algebra_bound)
    passed = worst >= -CONSTANT_TOL and algebra <= 1.0 + CONSTANT_TOL
    return SuiteResult(name="constants", passed=passed, worst=worst, tolerance=CONSTANT_TOL,
                       detail=f"L in {[round(float(x), 6) for x in lengths]}; "
                              f"max algebra ratio / 2 sqrt(L/12) = {algebra:.4f}")


def mollifier_suite(n_fields: int = 100, seed: int = 3) -> SuiteResult:
    """
    Fejer: contraction in V^0 and V^1, the smoothing bound ||J f||_{V^k} <= (2 pi / L)^k n^k ||f||_{V^0},
    and n ||J f - f||_{V^0} = (L / 2 pi) ||f||_{V^1} once n exceeds the band. Jackson: the same
    rate decreases over n.
    """
    grid = PeriodicGrid(n_points=64, length=2.0 * np.pi)
    band = 8
    rng = np.random.default_rng(seed)
    worst = 0.0
    jackson_ok = True
    for _ in range(n_fields):
        f = random_band_limited_field(grid, rng, max_mode=band)
        v0, v1 = vk_norm(f, 0), vk_norm(f, 1)
        for n in (4, 8, 16, 32):
            smoothed = mollify(f, 1.0 / n)
            worst = max(worst, vk_norm(smoothed, 0) - v0, vk_norm(smoothed, 1) - v1)
            for k in (1, 2):
                bound = (2.0 * np.pi / grid.length * n) ** k * v0
                worst = max(worst, (vk_norm(smoothed, k) - bound) / max(1.0, bound))
            rate = n * vk_norm(smoothed - f, 0)
            target = grid.length / (2.0 * np.pi) * v1
            gap = rate - target
            if n > band:
                gap = abs(gap)
            worst = max(worst, gap / max(1.0, target))
        rates = [n * vk_norm(mollify(f, 1.0 / n, "jackson") - f, 0) for n in JACKSON_LEVELS]
        jackson_ok = jackson_ok and all(b < a for a, b in zip(rates, rates[1:])) and rates[-1] < 0.5 * rates[0]
    passed = worst <= CONSTANT_TOL and jackson_ok
    return SuiteResult(name="mollifier", passed=passed, worst=worst, tolerance=CONSTANT_TOL,
                       detail=f"{n_fields} fields; Jackson rate decreasing: {jackson_ok}")


def clm_oracle_suite(n_points: int = 256, dt: float = 1e-3, t_final: float = 1.0) -> SuiteResult:
    """RK4 for CLM from w0 = cos z against the closed-form solution."""
    grid = PeriodicGrid(n_points=n_points, length=2.0 * np.pi)
    omega0 = Field.from_function(grid, np.cos)
    state = ModelState(u=Field.zeros(grid), omega=omega0)
    n_steps = int(round(t_final / dt))
    final = integrate_fixed(state, ModelSpec(kind=ModelKind.CLM), dt, n_steps)
    exact = clm_exact_solution(omega0, final.time)
    error = float(np.max(np.abs(final.omega.values - exact.values)))
    return SuiteResult(name="clm_oracle", passed=error <= CLM_ORACLE_TOL, worst=error, tolerance=CLM_ORACLE_TOL,
                       detail=f"N={n_points}, dt={dt:g}, t={final.time:g}")


SUITES = {
    "hilbert_oracle": hilbert_oracle_suite,
    "hilbert_invariants": hilbert_invariants_suite,
    "kernel_inequalities": kernel_suite,
    "constants": constants_suite,
    "mollifier": mollifier_suite,
    "clm_oracle": clm_oracle_suite,
}


def _timed(name: str, suite: Callable[[], SuiteResult]) -> SuiteResult:
    start = time.perf_counter()
    try:
        result = suite()
    except SimulationError as exc:
        logger.debug(f"Suite {name} raised", exc_info=True)
        result = SuiteResult(name=name, passed=False, detail=f"{type(exc).__name__}: {exc}")
    result = result.model_copy(update={"seconds": time.perf_counter() - start})
    level = logging.INFO if result.passed else logging.ERROR
    logger.log(level, f"Selftest {name}: {'passed' if result.passed else 'FAILED'} ({result.detail})")
    return result


def run_selftest(names: Optional[List[str]] = None) -> SelftestReport:
    """Run the named suites (all by default) in a fixed order."""
    names = list(SUITES) if not names else names
    unknown = [name for name in names if name not in SUITES]
    if unknown:
        raise ValueError(f"unknown selftest suites {unknown}, expected a subset of {list(SUITES)}")
    return SelftestReport(suites=[_timed(name, SUITES[name]) for name in names])
