#!/usr/bin/env python3
"""
runner.py

End-to-end execution of one configured run: build the initial state, drive the
integrator with a DiagnosticsTracker, then write timeseries.csv, the snapshots and
run.json into the output directory.
"""

import logging
from pathlib import Path
from typing import Any, Dict, Optional, Union

from .config_input.models import SimConfig
from .diagnostics import (
    DiagnosticsTracker,
    blowup_horizon,
    check_blowup_invariants,
    estimate_blowup_time,
    horizon_from_amplitude,
)
from .errors import DiagnosticsError
from .integrator import RunOutput, run
from .models import InitialKind, ModelKind
from .output import write_json, write_snapshots, write_timeseries

logger = logging.getLogger(__name__)


def make_tracker(config: SimConfig, state) -> DiagnosticsTracker:
    options = config.diag_options
    return DiagnosticsTracker(
        state,
        coarse_m=config.coarse_samples(),
        uz_floor=options.uz_floor,
        k_max=options.k_max,
        band_limit=config.grid_n // 3 if config.dealias else None,
    )


def summarize(config: SimConfig, result: RunOutput, tracker: DiagnosticsTracker) -> Dict[str, Any]:
    """The run.json document."""
    c0 = tracker.c0
    t_star_formula = None
    if config.initial.kind == InitialKind.PAPER_BLOWUP:
        t_star_formula = horizon_from_amplitude(config.initial.a, config.domain_length)

    try:
        blowup_fit = estimate_blowup_time(result.records).model_dump()
        blowup_fit["available"] = True
    except DiagnosticsError as exc:
        blowup_fit = {"available": False, "reason": str(exc)}

    invariants = None
    if (config.model == ModelKind.BOUNDARY_SYSTEM
            and config.initial.kind == InitialKind.PAPER_BLOWUP and result.records):
        report = check_blowup_invariants(result.records)
        invariants = report.model_dump()
        invariants["passed"] = report.passed

    return {
        "config": result.config_echo,
        "termination_reason": result.termination_reason.value,
        "steps": result.steps,
        "final_time": result.final_state.time,
        "c0": c0,
        "t_star_bound": blowup_horizon(c0),
        "t_star_formula": t_star_formula,
        "blowup_fit": blowup_fit,
        "invariants": invariants,
        "wall_time_seconds": result.wall_time_seconds,
    }


def run_simulation(config: SimConfig, output_dir: Optional[Union[str, Path]] = None,
                   progress: bool = False, write: bool = True) -> RunOutput:
    """
    Execute ``config`` and write its artifacts.

    Args:
        config: Validated run configuration.
        output_dir: Overrides ``config.output_dir`` when given.
        progress: Show a progress bar over simulated time.
        write: Skip all file output when False.

    Returns:
        RunOutput with ``config_echo`` filled in.
    """
    initial = config.initial_state()
    tracker = make_tracker(config, initial)
    result = run(
        initial,
        config.model_spec(),
        config.step_control(),
        config.t_end,
        hooks=tracker,
        diag_cadence=config.diag_cadence,
        record_interval=config.record_interval,
        snapshot_times=config.snapshot_times(),
        progress=progress,
    )
    result.config_echo = config.echo()
    result.summary = summarize(config, result, tracker)

    if write:
        directory = Path(output_dir if output_dir is not None else config.output_dir)
        directory.mkdir(parents=True, exist_ok=True)
        write_timeseries(result.records, directory / "timeseries.csv", tracker.k_max)
        write_snapshots(result.snapshots, directory)
        write_json(result.summary, directory / "run.json")
        logger.info(f"Artifacts written to {directory}")
    return result
