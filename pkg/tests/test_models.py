#!/usr/bin/env python3
"""
test_models.py

Tests for model specifications, right-hand sides, initial data and the CLM closed form.
"""

import sys
import unittest
from pathlib import Path

import numpy as np
from pydantic import ValidationError

sys.path.insert(0, str(Path(__file__).parent.parent))

from modules.errors import BlowupProximityError, GridError, ZeroMeanError
from modules.models import (
    InitialKind,
    ModeEntry,
    ModelKind,
    ModelSpec,
    ModelState,
    boundary_system_rhs,
    clm_exact_solution,
    evaluate_rhs,
    make_initial_data,
    scalar_rhs,
    symmetry_error,
    time_reversed,
)
from modules.spectral_core import Field, GridLayout, PeriodicGrid, derivative, hilbert_transform


class TestModelSpec(unittest.TestCase):
    """Model kinds and their coefficients."""

    def test_osw_requires_parameter(self):
        with self.assertRaises(ValidationError):
            ModelSpec(kind=ModelKind.OSW)
        with self.assertRaises(ValidationError):
            ModelSpec(kind=ModelKind.OSW, osw_a=float("inf"))
        self.assertEqual(ModelSpec(kind=ModelKind.OSW, osw_a=0.5).convection_coefficient, 0.5)

    def test_coefficients(self):
        self.assertEqual(ModelSpec(kind=ModelKind.CLM).convection_coefficient, 0.0)
        self.assertEqual(ModelSpec(kind=ModelKind.DE_GREGORIO).convection_coefficient, 1.0)
        self.assertIsNone(ModelSpec(kind=ModelKind.CCF).convection_coefficient)
        self.assertFalse(ModelSpec(kind=ModelKind.BOUNDARY_SYSTEM).is_scalar)
        self.assertFalse(ModelSpec(kind=ModelKind.CCF).conserves_mean)
        self.assertTrue(ModelSpec(kind=ModelKind.CLM).conserves_mean)


class TestModelState(unittest.TestCase):
    """State construction checks."""

    def test_grids_must_match(self):
        a = PeriodicGrid(n_points=16, length=1.0)
        b = PeriodicGrid(n_points=32, length=1.0)
        with self.assertRaises(GridError):
            ModelState(u=Field.zeros(a), omega=Field.zeros(b))

    def test_omega_must_have_zero_mean(self):
        grid = PeriodicGrid(n_points=16, length=1.0)
        with self.assertRaises(ZeroMeanError):
            ModelState(u=Field.zeros(grid), omega=Field(grid, np.ones(16)))


class TestRightHandSides(unittest.TestCase):
    """Boundary system and scalar family."""

    def setUp(self):
        self.grid = PeriodicGrid(n_points=64, length=2.0 * np.pi, layout=GridLayout.MIDPOINT)
        self.z = self.grid.points

    def test_rest_state_is_stationary(self):
        state = make_initial_data(InitialKind.CUSTOM_MODES, 1.0, self.grid, [])
        du, domega = boundary_system_rhs(state)
        self.assertEqual(du.max_abs(), 0.0)
        self.assertEqual(domega.max_abs(), 0.0)

    def test_boundary_system_with_zero_omega(self):
        state = make_initial_data(InitialKind.PAPER_BLOWUP, 1.0, self.grid)
        du, domega = boundary_system_rhs(state)
        # v = 0, so u is frozen and w grows like u_z
        self.assertLess(du.max_abs(), 1e-15)
        self.assertLess((domega - derivative(state.u)).max_abs(), 1e-14)

    def test_clm_rhs_is_stretching(self):
        omega = Field.from_function(self.grid, np.cos)
        rhs = scalar_rhs(omega, ModelSpec(kind=ModelKind.CLM))
        # H cos * cos = sin cos, dealiasing leaves mode 2 alone
        self.assertLess(np.max(np.abs(rhs.values - np.sin(self.z) * np.cos(self.z))), 1e-13)

    def test_scalar_rhs_rejects_boundary_system(self):
        omega = Field.from_function(self.grid, np.cos)
        with self.assertRaises(ValueError):
            scalar_rhs(omega, ModelSpec(kind=ModelKind.BOUNDARY_SYSTEM))

    def test_evaluate_rhs_gives_zero_u_rate_for_scalar_models(self):
        omega = Field.from_function(self.grid, np.sin)
        state = ModelState(u=Field.zeros(self.grid), omega=omega)
        du, _ = evaluate_rhs(state, ModelSpec(kind=ModelKind.DE_GREGORIO))
        self.assertEqual(du.max_abs(), 0.0)

    def test_ccf_matches_osw_minus_one(self):
        rng = np.random.default_rng(3)
        k = np.arange(1, 12)
        theta = Field(self.grid, np.cos(np.outer(self.z, k)) @ rng.standard_normal(11)
                      + np.sin(np.outer(self.z, k)) @ rng.standard_normal(11))
        ccf = scalar_rhs(theta, ModelSpec(kind=ModelKind.CCF))
        omega = -derivative(theta)
        osw = scalar_rhs(omega, ModelSpec(kind=ModelKind.OSW, osw_a=-1.0))
        gap = -derivative(ccf) - osw
        self.assertLess(gap.max_abs(), 1e-10 * max(1.0, osw.max_abs()))


class TestInitialData(unittest.TestCase):
    """paper_blowup and custom_modes data."""

    def setUp(self):
        self.grid = PeriodicGrid(n_points=128, length=2.0 * np.pi, layout=GridLayout.MIDPOINT)

    def test_paper_blowup_data(self):
        state = make_initial_data(InitialKind.PAPER_BLOWUP, 2.0, self.grid)
        literal = state.u.values + state.u_offset
        exact = 2.0 * np.sin(self.grid.mu * self.grid.points) ** 2
        self.assertLess(np.max(np.abs(literal - exact)), 1e-14)
        self.assertEqual(state.u_offset, 1.0)
        self.assertEqual(state.omega.max_abs(), 0.0)
        self.assertLess(abs(state.u.mean()), 1e-14)

    def test_paper_blowup_rejects_nonpositive_amplitude(self):
        with self.assertRaises(ValueError):
            make_initial_data(InitialKind.PAPER_BLOWUP, 0.0, self.grid)
        with self.assertRaises(ValueError):
            make_initial_data(InitialKind.PAPER_BLOWUP, float("nan"), self.grid)

    def test_custom_modes(self):
        modes = [ModeEntry(target="omega", k=2, sin=1.0), ModeEntry(target="u", k=1, cos=0.5)]
        state = make_initial_data(InitialKind.CUSTOM_MODES, 3.0, self.grid, modes)
        z = self.grid.points
        self.assertLess(np.max(np.abs(state.omega.values - 3.0 * np.sin(2.0 * z))), 1e-13)
        self.assertLess(np.max(np.abs(state.u.values - 1.5 * np.cos(z))), 1e-13)
        self.assertEqual(state.u_offset, 0.0)

    def test_unresolved_mode_is_rejected(self):
        with self.assertRaises(ValueError):
            make_initial_data(InitialKind.CUSTOM_MODES, 1.0, self.grid, [ModeEntry(target="omega", k=64, cos=1.0)])

    def test_mode_entry_is_strict(self):
        with self.assertRaises(ValidationError):
            ModeEntry(target="v", k=1)
        with self.assertRaises(ValidationError):
            ModeEntry(target="u", k=0)
        with self.assertRaises(ValidationError):
            ModeEntry(target="u", k=1, phase=0.3)


class TestSymmetry(unittest.TestCase):
    """Parity and time reversal."""

    def setUp(self):
        self.grid = PeriodicGrid(n_points=64, length=2.0 * np.pi, layout=GridLayout.MIDPOINT)

    def test_blowup_data_has_parity(self):
        state = make_initial_data(InitialKind.PAPER_BLOWUP, 1.0, self.grid)
        u_err, omega_err = symmetry_error(state)
        self.assertLess(u_err, 1e-14)
        self.assertEqual(omega_err, 0.0)

    def test_symmetry_error_detects_even_omega(self):
        state = ModelState(u=Field.zeros(self.grid), omega=Field.from_function(self.grid, np.cos))
        _, omega_err = symmetry_error(state)
        self.assertAlmostEqual(omega_err, np.max(np.abs(np.cos(self.grid.points))), places=12)

    def test_time_reversed_flips_omega(self):
        omega = Field.from_function(self.grid, np.sin)
        state = ModelState(u=Field.zeros(self.grid), omega=omega, time=0.5, u_offset=0.2)
        reversed_state = time_reversed(state)
        self.assertTrue(np.array_equal(reversed_state.omega.values, -omega.values))
        self.assertEqual(reversed_state.time, 0.5)
        self.assertEqual(reversed_state.u_offset, 0.2)


class TestClmExactSolution(unittest.TestCase):
    """Closed-form CLM solution."""

    def setUp(self):
        self.grid = PeriodicGrid(n_points=64, length=2.0 * np.pi)
        self.omega0 = Field.from_function(self.grid, np.cos)

    def test_initial_time_returns_data(self):
        exact = clm_exact_solution(self.omega0, 0.0)
        self.assertLess(np.max(np.abs(exact.values - self.omega0.values)), 1e-15)

    def test_closed_form_at_t_one(self):
        exact = clm_exact_solution(self.omega0, 1.0)
        z = self.grid.points
        h = hilbert_transform(self.omega0).values
        expected = 4.0 * np.cos(z) / ((2.0 - h) ** 2 + np.cos(z) ** 2)
        self.assertLess(np.max(np.abs(exact.values - expected)), 1e-14)
        self.assertLess(np.max(np.abs(h - np.sin(z))), 1e-14)

    def test_raises_near_singular_time(self):
        with self.assertRaises(BlowupProximityError) as ctx:
            clm_exact_solution(self.omega0, 2.0)
        self.assertLess(ctx.exception.min_denominator, 1e-8)


if __name__ == "__main__":
    unittest.main()
