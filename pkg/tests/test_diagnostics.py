#!/usr/bin/env python3
"""
test_diagnostics.py

Tests for h1 / h2, the tangent bound, the kernel K, the sign conditions, the blowup-time
fit and the DiagnosticsTracker.
"""

import math
import sys
import unittest
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).parent.parent))

from modules.diagnostics import (
    DiagnosticsRecord,
    DiagnosticsTracker,
    audit_D_positivity,
    blowup_horizon,
    bkm_accumulate,
    c0_from_data,
    check_blowup_invariants,
    check_convexity,
    check_D_positivity,
    check_kernel_inequalities,
    check_Q_monotonicity,
    check_uz_characteristics_bound,
    compute_h1,
    compute_h2,
    estimate_blowup_time,
    horizon_from_amplitude,
    kernel_K,
    lower_bound_curve,
)
from modules.errors import DiagnosticsError, GridError
from modules.models import InitialKind, ModelState, make_initial_data
from modules.spectral_core import Field, GridLayout, PeriodicGrid, derivative


def make_record(time, max_abs_omega=1.0, **overrides):
    values = dict(
        time=time, h1=0.0, h2=0.0, H_cum=0.0, bkm_integral=0.0, m0=1.0, lower_bound=0.0,
        max_abs_omega=max_abs_omega, min_vzz_halfdomain=0.0, min_D=0.0, min_Qz=0.0,
        uz_bound_ratio=0.0,
    )
    values.update(overrides)
    return DiagnosticsRecord(**values)


class TestBlowupFunctionals(unittest.TestCase):
    """h1, h2, c0 and the horizons."""

    def setUp(self):
        self.grid = PeriodicGrid(n_points=256, length=2.0 * np.pi, layout=GridLayout.MIDPOINT)
        self.blowup = make_initial_data(InitialKind.PAPER_BLOWUP, 1.0, self.grid)

    def test_h2_of_blowup_data(self):
        # h2(0) = a mu / 2 = 0.25 for a = 1, L = 2 pi
        self.assertAlmostEqual(compute_h2(self.blowup), 0.25, places=10)
        self.assertAlmostEqual(c0_from_data(self.blowup.u, self.blowup.u_offset), 0.5, places=10)

    def test_h2_tolerates_small_origin_drift(self):
        # a literal u(0) of 1e-7 is accumulated error, not a change of data
        self.assertAlmostEqual(compute_h2(self.blowup, u_offset=0.5 + 1e-7), 0.25, places=10)
        with self.assertRaises(DiagnosticsError):
            compute_h2(self.blowup, u_offset=0.5 + 1e-4)

    def test_h2_scales_with_amplitude(self):
        state = make_initial_data(InitialKind.PAPER_BLOWUP, 3.0, self.grid)
        self.assertAlmostEqual(compute_h2(state), 0.75, places=10)

    def test_h2_of_rest_state_on_any_layout(self):
        node = PeriodicGrid(n_points=32, length=1.0, layout=GridLayout.NODE)
        rest = ModelState(u=Field.zeros(node), omega=Field.zeros(node))
        self.assertEqual(compute_h2(rest), 0.0)

    def test_h2_needs_midpoint_layout(self):
        node = PeriodicGrid(n_points=64, length=2.0 * np.pi, layout=GridLayout.NODE)
        state = make_initial_data(InitialKind.PAPER_BLOWUP, 1.0, node)
        with self.assertRaises(GridError):
            compute_h2(state)

    def test_h2_rejects_nonzero_origin(self):
        u = Field.from_function(self.grid, np.cos)
        state = ModelState(u=u, omega=Field.zeros(self.grid))
        with self.assertRaises(DiagnosticsError):
            compute_h2(state)

    def test_h1_of_rest_and_sine(self):
        self.assertEqual(compute_h1(self.blowup), 0.0)
        # H sin = -cos, so h1 = -H w(0) = 1
        state = ModelState(u=Field.zeros(self.grid), omega=Field.from_function(self.grid, np.sin))
        self.assertAlmostEqual(compute_h1(state), 1.0, places=12)

    def test_horizons(self):
        self.assertAlmostEqual(blowup_horizon(0.5), 2.0 * math.pi, places=14)
        self.assertAlmostEqual(horizon_from_amplitude(1.0, 2.0 * math.pi), 2.0 * math.pi, places=14)
        self.assertEqual(blowup_horizon(0.0), math.inf)
        # pi / c0 with c0 = sqrt(a pi / (2 L)) is sqrt(2 pi L / a)
        for a, length in ((1.0, 2.0 * math.pi), (2.5, 3.0), (0.1, 10.0)):
            c0 = math.sqrt(a * math.pi / (2.0 * length))
            self.assertAlmostEqual(blowup_horizon(c0), horizon_from_amplitude(a, length), places=12)

    def test_lower_bound_curve(self):
        self.assertEqual(lower_bound_curve(0.5, 0.0), 0.0)
        self.assertAlmostEqual(lower_bound_curve(0.5, 1.0), math.tan(0.25), places=15)
        self.assertEqual(lower_bound_curve(0.5, 2.0 * math.pi), math.inf)
        self.assertEqual(lower_bound_curve(0.0, 100.0), 0.0)
        with self.assertRaises(ValueError):
            lower_bound_curve(0.5, -1.0)


class TestKernel(unittest.TestCase):
    """K(w) and its inequalities."""

    def test_values(self):
        self.assertEqual(kernel_K(0.0), 0.0)
        self.assertAlmostEqual(kernel_K(0.5), -0.5 * math.log(3.0), places=14)
        self.assertAlmostEqual(kernel_K(2.0), -2.0 * math.log(3.0), places=14)

    def test_domain(self):
        with self.assertRaises(DiagnosticsError):
            kernel_K(-0.1)
        with self.assertRaises(DiagnosticsError):
            kernel_K(1.0)

    def test_inequality_suite(self):
        report = check_kernel_inequalities(samples=10_000)
        self.assertGreaterEqual(report.samples, 10_000)
        self.assertLessEqual(report.worst_sum_margin, 1e-12)
        self.assertLessEqual(report.worst_reciprocal_margin, 1e-12)
        self.assertLessEqual(report.max_kernel_below_one, 1e-12)
        with self.assertRaises(ValueError):
            check_kernel_inequalities(samples=0)


class TestSignConditions(unittest.TestCase):
    """Convexity, D-positivity and Q-monotonicity checks."""

    def setUp(self):
        self.grid = PeriodicGrid(n_points=128, length=2.0 * np.pi, layout=GridLayout.MIDPOINT)

    def test_rest_state(self):
        rest = ModelState(u=Field.zeros(self.grid), omega=Field.zeros(self.grid))
        self.assertEqual(check_convexity(rest), 0.0)
        self.assertEqual(check_D_positivity(rest), 0.0)
        with self.assertRaises(DiagnosticsError):
            check_Q_monotonicity(rest)

    def test_D_vanishes_for_proportional_fields(self):
        # w = c u_z makes D identically zero
        blowup = make_initial_data(InitialKind.PAPER_BLOWUP, 1.0, self.grid)
        state = ModelState(u=blowup.u, omega=0.3 * derivative(blowup.u))
        self.assertAlmostEqual(check_D_positivity(state, coarse_m=32), 0.0, places=12)
        self.assertAlmostEqual(audit_D_positivity(state), 0.0, places=12)

    def test_D_sampling_range(self):
        rest = ModelState(u=Field.zeros(self.grid), omega=Field.zeros(self.grid))
        with self.assertRaises(ValueError):
            check_D_positivity(rest, coarse_m=1)
        with self.assertRaises(ValueError):
            check_D_positivity(rest, coarse_m=65)

    def test_convexity_of_sine_vorticity(self):
        # w = sin z gives v = -sin z, v_zz = sin z > 0 on (0, pi)
        state = ModelState(u=Field.zeros(self.grid), omega=Field.from_function(self.grid, np.sin))
        self.assertGreater(check_convexity(state), 0.0)
        flipped = ModelState(u=Field.zeros(self.grid), omega=Field.from_function(self.grid, lambda z: -np.sin(z)))
        self.assertLess(check_convexity(flipped), 0.0)

    def test_Q_constant_ratio(self):
        blowup = make_initial_data(InitialKind.PAPER_BLOWUP, 1.0, self.grid)
        state = ModelState(u=blowup.u, omega=2.0 * derivative(blowup.u))
        self.assertAlmostEqual(check_Q_monotonicity(state), 0.0, places=10)

    def test_characteristics_ratio(self):
        record = make_record(0.0, m0=2.0)
        self.assertEqual(check_uz_characteristics_bound(record, 0.0, 5.0), 0.0)
        self.assertAlmostEqual(check_uz_characteristics_bound(record, 1.0, 1.5), 0.75, places=15)


class TestBkmAndFit(unittest.TestCase):
    """BKM accumulation and blowup-time extrapolation."""

    def test_bkm_accumulate_trapezoid(self):
        grid = PeriodicGrid(n_points=64, length=2.0 * np.pi)
        state = ModelState(u=Field.zeros(grid), omega=Field.from_function(grid, lambda z: 2.0 * np.sin(z)))
        prev = make_record(0.0, hilbert_inf=1.0, bkm_integral=0.5)
        integral, m0 = bkm_accumulate(prev, state, 0.1)
        self.assertAlmostEqual(integral, 0.5 + 0.05 * 3.0, places=12)
        self.assertAlmostEqual(m0, math.exp(integral), places=12)

    def test_fit_recovers_pole(self):
        t_star = 3.0
        records = [make_record(t, max_abs_omega=1.0 / (t_star - t)) for t in np.linspace(0.0, 2.9, 40)]
        fit = estimate_blowup_time(records)
        self.assertAlmostEqual(fit.t_star_fit, t_star, places=8)
        self.assertGreater(fit.fit_quality, 0.999999)
        self.assertEqual(fit.window, 10)

    def test_fit_unavailable(self):
        with self.assertRaises(DiagnosticsError):
            estimate_blowup_time([make_record(float(t)) for t in range(5)])
        flat = [make_record(float(t), max_abs_omega=1.0) for t in range(12)]
        with self.assertRaises(DiagnosticsError):
            estimate_blowup_time(flat)


class TestTracker(unittest.TestCase):
    """DiagnosticsTracker records and accumulators."""

    def setUp(self):
        self.grid = PeriodicGrid(n_points=128, length=2.0 * np.pi, layout=GridLayout.MIDPOINT)

    def test_initial_record_of_blowup_data(self):
        state = make_initial_data(InitialKind.PAPER_BLOWUP, 1.0, self.grid)
        tracker = DiagnosticsTracker(state)
        self.assertAlmostEqual(tracker.c0, 0.5, places=10)
        record = tracker(state, 0.0, True)
        self.assertEqual(record.time, 0.0)
        self.assertEqual(record.h1, 0.0)
        self.assertAlmostEqual(record.h2, 0.25, places=10)
        self.assertEqual(record.bkm_integral, 0.0)
        self.assertEqual(record.m0, 1.0)
        self.assertEqual(record.lower_bound, 0.0)
        self.assertEqual(record.max_abs_omega, 0.0)
        self.assertAlmostEqual(record.uz_bound_ratio, 1.0, places=14)
        self.assertEqual(sorted(record.vk_norms), [0, 1, 2, 3, 4])

    def test_non_emitting_calls_accumulate(self):
        omega = Field.from_function(self.grid, np.sin)
        state = ModelState(u=Field.zeros(self.grid), omega=omega)
        tracker = DiagnosticsTracker(state)
        self.assertIsNone(tracker(state, 0.1, False))
        self.assertIsNone(tracker(state, 0.1, False))
        # ||H sin||_inf = max|cos| on the midpoint grid
        expected = 0.2 * float(np.max(np.abs(np.cos(self.grid.points))))
        self.assertAlmostEqual(tracker.bkm_integral, expected, places=12)

    def test_rest_state_record(self):
        rest = ModelState(u=Field.zeros(self.grid), omega=Field.zeros(self.grid))
        tracker = DiagnosticsTracker(rest)
        record = tracker(rest, 0.0, True)
        self.assertEqual(tracker.c0, 0.0)
        self.assertEqual(record.min_Qz, 0.0)
        self.assertEqual(record.h2, 0.0)
        self.assertEqual(record.uz_bound_ratio, 0.0)

    def test_undefined_h2_is_nan(self):
        u = Field.from_function(self.grid, np.cos)
        state = ModelState(u=u, omega=Field.zeros(self.grid))
        tracker = DiagnosticsTracker(state)
        self.assertFalse(tracker.h2_defined)
        record = tracker(state, 0.0, True)
        self.assertTrue(math.isnan(record.h2))
        self.assertTrue(math.isnan(record.lower_bound))

    def test_node_layout_with_u_data(self):
        node = PeriodicGrid(n_points=64, length=2.0 * np.pi, layout=GridLayout.NODE)
        state = ModelState(u=Field.from_function(node, np.cos), omega=Field.from_function(node, np.sin))
        tracker = DiagnosticsTracker(state)
        self.assertFalse(tracker.h2_defined)
        self.assertTrue(math.isnan(tracker.c0))
        record = tracker(state, 0.0, True)
        self.assertTrue(math.isnan(record.h2))
        self.assertAlmostEqual(record.max_abs_omega, 1.0, places=12)

    def test_constant_Q_scale_has_a_floor(self):
        blowup = make_initial_data(InitialKind.PAPER_BLOWUP, 1.0, self.grid)
        state = ModelState(u=blowup.u, omega=2.0 * derivative(blowup.u), u_offset=blowup.u_offset)
        record = DiagnosticsTracker(state)(state, 0.0, True)
        self.assertAlmostEqual(record.scales["Q"], 0.02, places=10)
        self.assertGreaterEqual(record.min_Qz, -1e-6 * record.scales["Q"])

    def test_parameters_are_clamped(self):
        small = PeriodicGrid(n_points=16, length=2.0 * np.pi, layout=GridLayout.MIDPOINT)
        rest = ModelState(u=Field.zeros(small), omega=Field.zeros(small))
        tracker = DiagnosticsTracker(rest, coarse_m=64, k_max=8)
        self.assertEqual(tracker.coarse_m, 8)
        self.assertEqual(tracker.k_max, 4)


class TestInvariantReport(unittest.TestCase):
    """check_blowup_invariants over synthetic records."""

    def test_consistent_records_pass(self):
        records = [
            make_record(t, h1=2.0 * t, h2=0.25 + t, H_cum=t, lower_bound=lower_bound_curve(0.5, t),
                        uz_bound_ratio=1.0)
            for t in (0.0, 0.5, 1.0)
        ]
        report = check_blowup_invariants(records)
        self.assertTrue(report.passed)
        self.assertEqual(report.records_checked, 3)

    def test_violations_are_flagged(self):
        records = [
            make_record(0.0, h2=0.3, uz_bound_ratio=1.0),
            make_record(1.0, h1=-1.0, h2=0.2, H_cum=0.0, uz_bound_ratio=1.1, min_D=-1.0,
                        scales={"vzz": 1.0, "D": 1.0, "Q": 1.0}),
        ]
        report = check_blowup_invariants(records)
        self.assertFalse(report.passed)
        self.assertFalse(report.integrated_bound_ok)
        self.assertFalse(report.h2_monotone)
        self.assertFalse(report.d_positive)
        self.assertFalse(report.characteristics_ok)

    def test_lost_h2_keeps_the_report(self):
        records = [
            make_record(0.0, h2=0.25, uz_bound_ratio=1.0),
            make_record(0.5, h1=0.5, h2=0.3, H_cum=0.1, uz_bound_ratio=1.0),
            make_record(1.0, h1=1.0, h2=math.nan, H_cum=math.nan, uz_bound_ratio=1.0),
        ]
        report = check_blowup_invariants(records)
        self.assertTrue(report.h2_monotone)
        self.assertTrue(report.integrated_bound_ok)
        self.assertAlmostEqual(report.worst_integrated_gap, 0.0, places=15)
        self.assertTrue(report.passed)
        self.assertEqual(report.records_checked, 3)

    def test_empty_records(self):
        with self.assertRaises(DiagnosticsError):
            check_blowup_invariants([])


if __name__ == "__main__":
    unittest.main()
