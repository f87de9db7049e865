#!/usr/bin/env python3
"""
test_selftest.py

Tests for the selftest suites and the command-line entry point.
"""

import json
import sys
import tempfile
import unittest
from pathlib import Path
from unittest import mock

import numpy as np
from click.testing import CliRunner

sys.path.insert(0, str(Path(__file__).parent.parent))

from config.config import TEMPLATES_DIR
from main import cli
from modules.errors import NumericalOverflowError
from modules.selftest import (
    SUITES,
    SelftestReport,
    SuiteResult,
    clm_oracle_suite,
    constants_suite,
    hilbert_invariants_suite,
    kernel_suite,
    mollifier_suite,
    random_band_limited_field,
    run_selftest,
)
from modules.spectral_core import PeriodicGrid


class TestSuites(unittest.TestCase):
    """Individual suites on reduced sample counts."""

    def test_random_field_is_band_limited(self):
        grid = PeriodicGrid(n_points=64, length=2.0 * np.pi)
        f = random_band_limited_field(grid, np.random.default_rng(0))
        self.assertTrue(f.zero_mean_required)
        self.assertLess(abs(f.mean()), 1e-13)
        self.assertLess(np.max(np.abs(f.spectrum[9:])), 1e-10)

    def test_hilbert_invariants(self):
        result = hilbert_invariants_suite(n_fields=20)
        self.assertTrue(result.passed, result.detail)

    def test_kernel_inequalities(self):
        self.assertTrue(kernel_suite(samples=2000).passed)

    def test_constants(self):
        result = constants_suite(n_fields=20)
        self.assertTrue(result.passed, result.detail)

    def test_mollifier(self):
        result = mollifier_suite(n_fields=5)
        self.assertTrue(result.passed, result.detail)

    def test_clm_oracle(self):
        result = clm_oracle_suite()
        self.assertTrue(result.passed, result.detail)
        self.assertLess(result.worst, 1e-8)


class TestRunSelftest(unittest.TestCase):
    """Suite selection and failure reporting."""

    def test_unknown_suite(self):
        with self.assertRaises(ValueError):
            run_selftest(["no_such_suite"])

    def test_report_passed(self):
        ok = SuiteResult(name="a", passed=True)
        bad = SuiteResult(name="b", passed=False)
        self.assertTrue(SelftestReport(suites=[ok]).passed)
        self.assertFalse(SelftestReport(suites=[ok, bad]).passed)

    def test_selected_suite_only(self):
        report = run_selftest(["kernel_inequalities"])
        self.assertEqual([s.name for s in report.suites], ["kernel_inequalities"])
        self.assertTrue(report.passed)
        self.assertGreaterEqual(report.suites[0].seconds, 0.0)

    def test_raising_suite_is_a_failure(self):
        broken = mock.Mock(side_effect=NumericalOverflowError("boom"))
        with mock.patch.dict(SUITES, {"clm_oracle": broken}):
            report = run_selftest(["clm_oracle"])
        self.assertFalse(report.passed)
        self.assertIn("boom", report.suites[0].detail)


class TestCommandLine(unittest.TestCase):
    """Exit codes of the click commands."""

    def setUp(self):
        self.runner = CliRunner()
        self._tmp = tempfile.TemporaryDirectory()
        self.output_dir = Path(self._tmp.name)

    def tearDown(self):
        self._tmp.cleanup()

    def test_selftest_command(self):
        result = self.runner.invoke(cli, ["--quiet", "selftest", "--suite", "kernel_inequalities"], obj={})
        self.assertEqual(result.exit_code, 0, result.output)

    def test_config_error_exit_code(self):
        path = self.output_dir / "bad.json"
        path.write_text(json.dumps({"model": "boundary_system", "grid_n": 48}), encoding="utf-8")
        result = self.runner.invoke(cli, ["--quiet", "simulate", str(path)], obj={})
        self.assertEqual(result.exit_code, 3)

    def test_simulate_rest_state(self):
        result = self.runner.invoke(
            cli, ["--quiet", "--output-dir", str(self.output_dir), "simulate",
                  str(TEMPLATES_DIR / "rest_state.json")], obj={})
        self.assertEqual(result.exit_code, 0, result.output)
        self.assertTrue((self.output_dir / "run.json").exists())

    def test_bad_scales(self):
        result = self.runner.invoke(
            cli, ["--quiet", "--output-dir", str(self.output_dir), "perturb",
                  str(TEMPLATES_DIR / "clm_cosine.json"), "--scales", "1e-4,1e-2"], obj={})
        self.assertNotEqual(result.exit_code, 0)


if __name__ == "__main__":
    unittest.main()
