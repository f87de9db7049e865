#!/usr/bin/env python3
"""
output.py

Writers for run artifacts: timeseries.csv, snapshot_<i>.csv, run.json and the study
reports. Floats are written with repr, the shortest string that round-trips, so two
identical runs produce byte-identical files.
"""

import csv
import json
import logging
import math
from pathlib import Path
from typing import Any, Iterable, List, Sequence, Union

from .diagnostics import DiagnosticsRecord
from .integrator import Snapshot

logger = logging.getLogger(__name__)

TIMESERIES_COLUMNS = [
    "time", "h1", "h2", "H_cum", "bkm_integral", "m0", "lower_bound", "max_abs_omega",
    "min_vzz_halfdomain", "min_D", "min_Qz", "uz_bound_ratio",
]
SNAPSHOT_COLUMNS = ["z", "u", "omega", "v"]

PathLike = Union[str, Path]


def format_float(value: float) -> str:
    return repr(float(value))


def timeseries_columns(k_max: int) -> List[str]:
    columns = list(TIMESERIES_COLUMNS)
    for k in range(k_max + 1):
        columns += [f"u_V{k + 1}", f"omega_V{k}"]
    return columns


def _prepare(path: PathLike) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    return path


def write_rows(path: PathLike, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> Path:
    """Write a CSV with a header row; floats go through format_float."""
    path = _prepare(path)
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([format_float(cell) if isinstance(cell, float) else cell for cell in row])
    logger.debug(f"Wrote {path}")
    return path


def write_timeseries(records: Sequence[DiagnosticsRecord], path: PathLike, k_max: int) -> Path:
    def row(record: DiagnosticsRecord) -> List[float]:
        values = [float(getattr(record, column)) for column in TIMESERIES_COLUMNS]
        for k in range(k_max + 1):
            u_norm, omega_norm = record.vk_norms.get(k, (math.nan, math.nan))
            values += [float(u_norm), float(omega_norm)]
        return values

    path = write_rows(path, timeseries_columns(k_max), (row(r) for r in records))
    logger.info(f"Time series saved to {path} ({len(records)} records)")
    return path


def write_snapshot(snapshot: Snapshot, path: PathLike) -> Path:
    rows = zip(*(map(float, column) for column in (snapshot.z, snapshot.u, snapshot.omega, snapshot.v)))
    return write_rows(path, SNAPSHOT_COLUMNS, rows)


def write_snapshots(snapshots: Sequence[Snapshot], output_dir: PathLike) -> List[Path]:
    output_dir = Path(output_dir)
    paths = [write_snapshot(snap, output_dir / f"snapshot_{index}.csv")
             for index, snap in enumerate(snapshots)]
    if paths:
        logger.info(f"{len(paths)} snapshots saved to {output_dir}")
    return paths


def _json_safe(value: Any) -> Any:
    """Non-finite floats become null so the document stays standard JSON."""
    if isinstance(value, float):
        return value if math.isfinite(value) else None
    if isinstance(value, dict):
        return {key: _json_safe(item) for key, item in value.items()}
    if isinstance(value, (list, tuple)):
        return [_json_safe(item) for item in value]
    return value


def write_json(document: dict, path: PathLike) -> Path:
    path = _prepare(path)
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(_json_safe(document), handle, indent=2, allow_nan=False)
        handle.write("\n")
    logger.info(f"Summary saved to {path}")
    return path
