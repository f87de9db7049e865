#!/usr/bin/env python3
"""
main.py

Command-line entry point for the boundary-model laboratory.

    python main.py simulate templates/paper_blowup.json
    python main.py refine templates/clm_cosine.json --levels 3
    python main.py perturb templates/clm_cosine.json --scales 1e-2,1e-3,1e-4
    python main.py mollify templates/paper_blowup.json --levels 8,16,32
    python main.py selftest

Exit codes: 0 for physics outcomes, 2 for dt_floor / overflow, 3 for configuration
errors, 4 for a failed selftest.
"""

import logging
import sys

import click
from colorama import Fore, Style, init
from rich.console import Console
from rich.table import Table

from config.config import configure_logging
from modules.config_input import load_config
from modules.errors import ConfigError, SimulationError
from modules.runner import run_simulation
from modules.selftest import SUITES, run_selftest
from modules.studies import mollification_study, perturbation_study, refinement_study

# Initialize colorama
init(autoreset=True)

logger = logging.getLogger(__name__)
console = Console()

EXIT_OK = 0
EXIT_NUMERICAL = 2
EXIT_CONFIG = 3
EXIT_SELFTEST = 4


def _float_list(ctx, param, value):
    if value is None:
        return None
    try:
        return [float(item) for item in value.split(",") if item.strip()]
    except ValueError:
        raise click.BadParameter(f"expected comma-separated numbers, got '{value}'")


def _int_list(ctx, param, value):
    if value is None:
        return None
    try:
        return [int(item) for item in value.split(",") if item.strip()]
    except ValueError:
        raise click.BadParameter(f"expected comma-separated integers, got '{value}'")


def _load(path: str):
    try:
        return load_config(path)
    except ConfigError as e:
        logger.debug("Configuration rejected", exc_info=True)
        print(Fore.RED + f"Configuration error: {e}")
        sys.exit(EXIT_CONFIG)


def _fail(e: SimulationError) -> None:
    logger.debug("Run aborted", exc_info=True)
    print(Fore.RED + f"Error: {type(e).__name__}: {e}")
    sys.exit(EXIT_NUMERICAL)


def _fmt(value) -> str:
    if value is None:
        return "-"
    if isinstance(value, float):
        return f"{value:.6g}"
    return str(value)

# -----------------------------------------------------------------------------
# CLI Interface
# -----------------------------------------------------------------------------

@click.group()
@click.option("--quiet", is_flag=True, help="Only warnings and errors; no progress bars")
@click.option("--verbose", is_flag=True, help="Debug logging")
@click.option("--output-dir", default=None, help="Override the output directory of the config")
@click.pass_context
def cli(ctx, quiet, verbose, output_dir):
    """Pseudospectral laboratory for the 1D boundary model of axisymmetric Euler."""
    configure_logging(quiet=quiet, verbose=verbose)
    ctx.ensure_object(dict)
    ctx.obj["quiet"] = quiet
    ctx.obj["output_dir"] = output_dir


@cli.command()
@click.argument("config_path", type=click.Path(dir_okay=False))
@click.pass_context
def simulate(ctx, config_path):
    """Run one configured simulation and write its artifacts."""
    config = _load(config_path)
    try:
        result = run_simulation(config, ctx.obj["output_dir"], progress=not ctx.obj["quiet"])
    except SimulationError as e:
        _fail(e)

    summary = result.summary
    table = Table(title=f"{config.model.value} run, N={config.grid_n}")
    table.add_column("quantity")
    table.add_column("value", justify="right")
    for key in ("termination_reason", "steps", "final_time", "c0", "t_star_bound", "t_star_formula"):
        table.add_row(key, _fmt(summary[key]))
    fit = summary["blowup_fit"]
    table.add_row("blowup_fit", _fmt(fit.get("t_star_fit")) if fit["available"] else "unavailable")
    if summary["invariants"] is not None:
        table.add_row("invariants", "passed" if summary["invariants"]["passed"] else "FAILED")
    console.print(table)

    if result.exit_ok:
        print(Fore.GREEN + f"Run finished: {result.termination_reason.value}")
        sys.exit(EXIT_OK)
    print(Fore.RED + f"Run stopped on a numerical failure: {result.termination_reason.value}")
    sys.exit(EXIT_NUMERICAL)


@cli.command()
@click.argument("config_path", type=click.Path(dir_okay=False))
@click.option("--levels", default=3, show_default=True, type=click.IntRange(min=2),
              help="Number of grids N, 2N, 4N, ...")
@click.pass_context
def refine(ctx, config_path, levels):
    """Run the same configuration on successively refined grids."""
    config = _load(config_path)
    try:
        report = refinement_study(config, levels, ctx.obj["output_dir"], progress=not ctx.obj["quiet"])
    except SimulationError as e:
        _fail(e)
    except ValueError as e:
        raise click.BadParameter(str(e))

    table = Table(title="Refinement")
    for column in ("N coarse", "N fine", "1% agreement up to", "coarse reason"):
        table.add_column(column)
    for comparison in report.comparisons:
        table.add_row(str(comparison.n_coarse), str(comparison.n_fine),
                      _fmt(comparison.agreement_horizon),
                      report.termination_reasons[comparison.n_coarse])
    console.print(table)
    if report.oracle_errors:
        for n, error in report.oracle_errors.items():
            print(Fore.CYAN + f"N={n}: max error against the closed form {_fmt(error)}")


@cli.command()
@click.argument("config_path", type=click.Path(dir_okay=False))
@click.option("--scales", required=True, callback=_float_list, help="Decreasing scales, e.g. 1e-2,1e-3,1e-4")
@click.option("--t-safe", default=0.5, show_default=True, type=float, help="Common comparison horizon")
@click.pass_context
def perturb(ctx, config_path, scales, t_safe):
    """Measure W^1 distances between perturbed and base solutions."""
    config = _load(config_path)
    try:
        report = perturbation_study(config, scales, t_safe, ctx.obj["output_dir"],
                                    progress=not ctx.obj["quiet"])
    except SimulationError as e:
        _fail(e)
    except ValueError as e:
        raise click.BadParameter(str(e))

    table = Table(title=f"Perturbation (t_safe={t_safe:g})")
    for column in ("scale", "W1 distance", "ratio"):
        table.add_column(column, justify="right")
    for scale, distance, ratio in zip(report.scales, report.distances, report.ratios):
        table.add_row(_fmt(scale), _fmt(distance), _fmt(ratio))
    console.print(table)
    colour = Fore.GREEN if report.monotone else Fore.YELLOW
    print(colour + f"Distances monotone: {report.monotone}")


@cli.command()
@click.argument("config_path", type=click.Path(dir_okay=False))
@click.option("--levels", required=True, callback=_int_list, help="Mollifier orders n, e.g. 8,16,32")
@click.option("--t-safe", default=0.5, show_default=True, type=float, help="Comparison time")
@click.option("--kernel", type=click.Choice(["fejer", "jackson"]), default="fejer", show_default=True)
@click.pass_context
def mollify(ctx, config_path, levels, t_safe, kernel):
    """Compare runs from mollified data against the unsmoothed run."""
    config = _load(config_path)
    try:
        report = mollification_study(config, levels, t_safe, kernel, ctx.obj["output_dir"],
                                     progress=not ctx.obj["quiet"])
    except SimulationError as e:
        _fail(e)
    except ValueError as e:
        raise click.BadParameter(str(e))

    table = Table(title=f"Mollified data ({kernel}, t_safe={t_safe:g})")
    for column in ("n", "initial distance", "final distance"):
        table.add_column(column, justify="right")
    for n, first, last in zip(report.levels, report.initial_distances, report.final_distances):
        table.add_row(str(n), _fmt(first), _fmt(last))
    console.print(table)
    colour = Fore.GREEN if report.monotone else Fore.YELLOW
    print(colour + f"Distances nonincreasing in n: {report.monotone}")


@cli.command()
@click.option("--suite", "suites", multiple=True, type=click.Choice(list(SUITES)),
              help="Run only this suite (repeatable)")
def selftest(suites):
    """Run the numerical self-check suites."""
    report = run_selftest(list(suites))

    table = Table(title="Selftest")
    for column in ("suite", "result", "worst", "tolerance", "seconds", "detail"):
        table.add_column(column)
    for suite in report.suites:
        result = "[green]pass[/green]" if suite.passed else "[red]FAIL[/red]"
        table.add_row(suite.name, result, _fmt(suite.worst), _fmt(suite.tolerance),
                      f"{suite.seconds:.2f}", suite.detail)
    console.print(table)

    if report.passed:
        print(Fore.GREEN + "All selftest suites passed")
        sys.exit(EXIT_OK)
    print(Fore.RED + "Selftest failed" + Style.RESET_ALL)
    sys.exit(EXIT_SELFTEST)


if __name__ == "__main__":
    cli(obj={})
