#!/usr/bin/env python3
"""
studies.py

Multi-run harnesses built on run_simulation and the fixed-step integrator:

- refinement_study: the same run at N, 2N, 4N, ... compared on a common record cadence.
- perturbation_study: continuous dependence on the data, W^1 distance against a fixed bump.
- mollification_study: runs from mollified data J_{1/n} h0 against the unsmoothed run.

Member runs execute in a thread pool sized by SIM_THREADS; reports are written after
every member has finished.
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor, as_completed
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence, TypeVar, Union

import numpy as np
from pydantic import BaseModel
from tqdm import tqdm

from config.config import get_sim_threads

from .analysis_norms import mollify, w_distance
from .config_input.models import SimConfig
from .errors import BlowupProximityError
from .integrator import RunOutput, integrate_fixed
from .models import ModelKind, ModelState, clm_exact_solution
from .output import write_json, write_rows
from .runner import run_simulation
from .spectral_core import Field, PeriodicGrid

logger = logging.getLogger(__name__)

REFINE_QUANTITIES = ("h1", "h2", "H_cum", "bkm_integral", "max_abs_omega")
AGREEMENT_RTOL = 0.01
AGREEMENT_ATOL = 1e-12
DEFAULT_T_SAFE = 0.5

T = TypeVar("T")
R = TypeVar("R")
PathLike = Union[str, Path]

# -----------------------------------------------------------------------------
# Reports
# -----------------------------------------------------------------------------

class LevelComparison(BaseModel):
    n_coarse: int
    n_fine: int
    agreement_horizon: Optional[float]
    max_abs_diff: Dict[str, float]


class RefinementReport(BaseModel):
    grid_sizes: List[int]
    record_interval: float
    termination_reasons: Dict[int, str]
    comparisons: List[LevelComparison]
    oracle_errors: Optional[Dict[int, Optional[float]]] = None


class PerturbationReport(BaseModel):
    scales: List[float]
    distances: List[float]
    ratios: List[Optional[float]]
    monotone: bool
    t_safe: float
    dt: float


class MollificationReport(BaseModel):
    levels: List[int]
    initial_distances: List[float]
    final_distances: List[float]
    monotone: bool
    t_safe: float
    kernel: str

# -----------------------------------------------------------------------------
# Helpers
# -----------------------------------------------------------------------------

def _parallel_map(func: Callable[[T], R], items: Sequence[T], threads: Optional[int],
                  desc: str, progress: bool) -> List[R]:
    workers = max(1, min(threads or get_sim_threads(), len(items)))
    results: List[Optional[R]] = [None] * len(items)
    with ThreadPoolExecutor(max_workers=workers) as executor:
        futures = {executor.submit(func, item): index for index, item in enumerate(items)}
        for future in tqdm(as_completed(futures), total=len(futures), desc=desc,
                           disable=not progress, leave=False):
            results[futures[future]] = future.result()
    return results


def _output_root(config: SimConfig, output_dir: Optional[PathLike]) -> Path:
    root = Path(output_dir if output_dir is not None else config.output_dir)
    root.mkdir(parents=True, exist_ok=True)
    return root


def _fixed_steps(config: SimConfig, t_safe: float):
    n_steps = max(1, math.ceil(t_safe / config.dt_max - 1e-9))
    return n_steps, t_safe / n_steps


def _trajectory(config: SimConfig, state: ModelState, t_safe: float) -> List[ModelState]:
    n_steps, dt = _fixed_steps(config, t_safe)
    states = [state]
    integrate_fixed(state, config.model_spec(), dt, n_steps, dealias=config.dealias,
                    observer=states.append)
    return states


def perturbation_bump(grid: PeriodicGrid) -> Field:
    """cos(2 k1 z) - cos(k1 z): zero mean, even, and zero at z = 0."""
    k1 = 2.0 * np.pi / grid.length
    return Field.from_function(grid, lambda z: np.cos(2.0 * k1 * z) - np.cos(k1 * z))


def _agrees(coarse: float, fine: float) -> bool:
    diff = abs(coarse - fine)
    return diff <= AGREEMENT_ATOL or diff <= AGREEMENT_RTOL * abs(fine)

# -----------------------------------------------------------------------------
# Refinement
# -----------------------------------------------------------------------------

def refinement_study(base_config: SimConfig, levels: int,
                     output_dir: Optional[PathLike] = None, threads: Optional[int] = None,
                     progress: bool = False) -> RefinementReport:
    """
    Run ``base_config`` at grid_n * 2^i for i < levels and compare successive levels.

    Writes refine_report.csv (time, quantity, n_coarse, n_fine, coarse_value, fine_value,
    abs_diff, rel_diff) and refine_summary.json into the output directory.
    """
    if levels < 2:
        raise ValueError(f"levels must be >= 2, got {levels}")
    if base_config.t_end <= 0:
        raise ValueError("refinement needs t_end > 0")

    root = _output_root(base_config, output_dir)
    interval = base_config.record_interval or base_config.t_end / 20.0
    sizes = [base_config.grid_n * 2 ** i for i in range(levels)]
    members = [
        base_config.model_copy(update={"grid_n": n, "record_interval": interval, "snapshot_count": 0})
        for n in sizes
    ]
    logger.info(f"Refinement study: N = {sizes}, record interval {interval:g}")

    outputs: List[RunOutput] = _parallel_map(
        lambda member: run_simulation(member, root / f"refine_N{member.grid_n}"),
        members, threads, "refine", progress,
    )

    rows = []
    comparisons = []
    for (coarse_n, coarse), (fine_n, fine) in zip(zip(sizes, outputs), zip(sizes[1:], outputs[1:])):
        fine_by_time = {r.time: r for r in fine.records}
        common = [(r, fine_by_time[r.time]) for r in coarse.records if r.time in fine_by_time]
        horizon = None
        agreeing = True
        max_diff: Dict[str, float] = {}
        for coarse_record, fine_record in common:
            all_agree = True
            for quantity in REFINE_QUANTITIES:
                c_value = getattr(coarse_record, quantity)
                f_value = getattr(fine_record, quantity)
                if not (math.isfinite(c_value) and math.isfinite(f_value)):
                    continue
                diff = abs(c_value - f_value)
                scale = max(abs(c_value), abs(f_value))
                rel = diff / scale if scale > 0 else 0.0
                rows.append((coarse_record.time, quantity, coarse_n, fine_n,
                             float(c_value), float(f_value), float(diff), float(rel)))
                max_diff[quantity] = max(max_diff.get(quantity, 0.0), diff)
                all_agree = all_agree and _agrees(c_value, f_value)
            agreeing = agreeing and all_agree
            if agreeing:
                horizon = coarse_record.time
        comparisons.append(LevelComparison(n_coarse=coarse_n, n_fine=fine_n,
                                           agreement_horizon=horizon, max_abs_diff=max_diff))
        logger.info(f"N={coarse_n} vs N={fine_n}: agreement within 1% up to t={horizon}")

    oracle_errors = None
    if base_config.model == ModelKind.CLM:
        oracle_errors = {}
        for member, output in zip(members, outputs):
            omega0 = member.initial_state().omega
            try:
                exact = clm_exact_solution(omega0, output.final_state.time)
            except BlowupProximityError:
                oracle_errors[member.grid_n] = None
                continue
            oracle_errors[member.grid_n] = float(np.max(np.abs(output.final_state.omega.values - exact.values)))

    report = RefinementReport(
        grid_sizes=sizes,
        record_interval=interval,
        termination_reasons={n: out.termination_reason.value for n, out in zip(sizes, outputs)},
        comparisons=comparisons,
        oracle_errors=oracle_errors,
    )
    write_rows(root / "refine_report.csv",
               ["time", "quantity", "n_coarse", "n_fine", "coarse_value", "fine_value",
                "abs_diff", "rel_diff"], rows)
    write_json(report.model_dump(mode="json"), root / "refine_summary.json")
    return report

# -----------------------------------------------------------------------------
# Continuous dependence
# -----------------------------------------------------------------------------

def _perturbed(config: SimConfig, state: ModelState, scale: float) -> ModelState:
    bump = scale * perturbation_bump(state.grid)
    if config.model_spec().is_scalar:
        return ModelState(u=state.u, omega=state.omega + bump, time=state.time, u_offset=state.u_offset)
    return ModelState(u=state.u + bump, omega=state.omega, time=state.time, u_offset=state.u_offset)


def perturbation_study(base_config: SimConfig, scales: Sequence[float],
                       t_safe: float = DEFAULT_T_SAFE, output_dir: Optional[PathLike] = None,
                       threads: Optional[int] = None, progress: bool = False) -> PerturbationReport:
    """
    Max-over-time W^1 distance on [0, t_safe] between the base run and runs whose data
    is shifted by ``scale`` times a fixed bump. Writes perturb_report.csv.
    """
    scales = [float(s) for s in scales]
    if not scales:
        raise ValueError("at least one perturbation scale is required")
    if any(s < 0 for s in scales) or any(b > a for a, b in zip(scales, scales[1:])):
        raise ValueError(f"scales must be nonnegative and decreasing, got {scales}")
    if not t_safe > 0:
        raise ValueError(f"t_safe must be positive, got {t_safe}")

    root = _output_root(base_config, output_dir)
    initial = base_config.initial_state()
    base = _trajectory(base_config, initial, t_safe)
    n_steps, dt = _fixed_steps(base_config, t_safe)
    spec = base_config.model_spec()
    logger.info(f"Perturbation study: scales {scales}, t_safe={t_safe:g}, {n_steps} steps of {dt:g}")

    def distance_for(scale: float) -> float:
        state = _perturbed(base_config, initial, scale)
        worst = [w_distance(state, base[0])]
        step = iter(base[1:])
        integrate_fixed(state, spec, dt, n_steps, dealias=base_config.dealias,
                        observer=lambda s: worst.append(w_distance(s, next(step))))
        return max(worst)

    distances = _parallel_map(distance_for, scales, threads, "perturb", progress)
    ratios: List[Optional[float]] = [None]
    for previous, current in zip(distances, distances[1:]):
        ratios.append(current / previous if previous > 0 else None)
    monotone = all(b <= a for a, b in zip(distances, distances[1:]))
    if not monotone:
        logger.warning(f"Perturbation distances are not monotone: {distances}")

    write_rows(root / "perturb_report.csv", ["scale", "w1_distance", "ratio_to_previous"],
               [(s, d, "" if r is None else r) for s, d, r in zip(scales, distances, ratios)])
    return PerturbationReport(scales=scales, distances=distances, ratios=ratios,
                              monotone=monotone, t_safe=t_safe, dt=dt)

# -----------------------------------------------------------------------------
# Mollified data
# -----------------------------------------------------------------------------

def mollified_state(state: ModelState, n: int, kernel: str = "fejer") -> ModelState:
    epsilon = 1.0 / n
    return ModelState(u=mollify(state.u, epsilon, kernel), omega=mollify(state.omega, epsilon, kernel),
                      time=state.time, u_offset=state.u_offset)


def mollification_study(base_config: SimConfig, levels: Sequence[int],
                        t_safe: float = DEFAULT_T_SAFE, kernel: str = "fejer",
                        output_dir: Optional[PathLike] = None, threads: Optional[int] = None,
                        progress: bool = False) -> MollificationReport:
    """
    Solutions from J_{1/n} h0 against the solution from h0, at t = 0 and t = t_safe.
    Writes mollify_report.csv (n, epsilon, initial_distance, final_distance).
    """
    levels = sorted(int(n) for n in levels)
    if not levels or levels[0] < 1:
        raise ValueError(f"levels must be positive integers, got {levels}")

    root = _output_root(base_config, output_dir)
    initial = base_config.initial_state()
    n_steps, dt = _fixed_steps(base_config, t_safe)
    spec = base_config.model_spec()
    reference = integrate_fixed(initial, spec, dt, n_steps, dealias=base_config.dealias)
    logger.info(f"Mollification study: n = {levels}, kernel={kernel}, t_safe={t_safe:g}")

    def distances_for(n: int):
        smoothed = mollified_state(initial, n, kernel)
        final = integrate_fixed(smoothed, spec, dt, n_steps, dealias=base_config.dealias)
        return w_distance(smoothed, initial), w_distance(final, reference)

    pairs = _parallel_map(distances_for, levels, threads, "mollify", progress)
    initial_distances = [p[0] for p in pairs]
    final_distances = [p[1] for p in pairs]
    monotone = all(b <= a for a, b in zip(final_distances, final_distances[1:]))
    if not monotone:
        logger.warning(f"Mollified-data distances are not monotone in n: {final_distances}")

    write_rows(root / "mollify_report.csv", ["n", "epsilon", "initial_distance", "final_distance"],
               [(n, 1.0 / n, a, b) for n, a, b in zip(levels, initial_distances, final_distances)])
    return MollificationReport(levels=levels, initial_distances=initial_distances,
                               final_distances=final_distances, monotone=monotone,
                               t_safe=t_safe, kernel=kernel)
