#!/usr/bin/env python3
"""
Simulation commands.
Single seeded runs and seed sweeps over node counts, written as CSV.
"""

import logging
from pathlib import Path

import typer

from vanet_aggregator.config import DEFAULT_DATABASE_PATH, SWEEP_RUNS, SWEEP_STEP
from vanet_aggregator.services.sweep_service import (
    archive_runs,
    simulate,
    summarize,
    sweep,
    bench_rows,
)
from vanet_aggregator.settings import ConfigError, SimConfig, resolve_config
from vanet_aggregator.simulation.engine import SimulationError
from vanet_aggregator.utils.csv_utils import write_csv
from vanet_aggregator.utils.db_utils import get_db_session, init_database
from vanet_aggregator.utils.range_utils import parse_range, stepped

logger = logging.getLogger(__name__)

EXIT_USAGE = 2
EXIT_CONFIG = 3
EXIT_RUNTIME = 4


def _load(config: Path | None, preset: str | None, **overrides) -> SimConfig:
    try:
        loaded = resolve_config(config, preset)
        overrides = {key: value for key, value in overrides.items() if value is not None}
        return loaded.with_overrides(**overrides) if overrides else loaded
    except ConfigError as e:
        typer.echo(f"Config error: {e}", err=True)
        raise typer.Exit(code=EXIT_CONFIG)


def _emit(rows: list[dict], output: Path | None) -> None:
    text = write_csv(rows, output)
    if output is None:
        typer.echo(text, nl=False)
    else:
        typer.echo(f"Wrote {len(rows)} row(s) to {output}", err=True)


def sim_run(
    config: Path = typer.Option(None, "--config", help="Config file with one 'key = value' per line"),
    preset: str = typer.Option(None, "--preset", help="Named preset: default, fig12, fig13, table2"),
    seed: int = typer.Option(None, "--seed", help="Run seed; overrides the config"),
    baseline: bool = typer.Option(False, "--baseline", help="Run the basic scheme without aggregation"),
    trace: Path = typer.Option(None, "--trace", help="Write the event trace to this file"),
    output: Path = typer.Option(None, "--output", help="CSV file to write instead of stdout"),
):
    """
    Run one seeded simulation and print its metrics row.
    """
    sim_config = _load(config, preset, seed=seed)
    try:
        if sim_config.experiment == "verification_bench":
            rows = bench_rows(sim_config)
        elif trace is not None:
            trace.parent.mkdir(parents=True, exist_ok=True)
            with open(trace, "w", encoding="utf-8") as stream:
                rows = [simulate(sim_config, baseline=baseline, trace=stream)[0]]
            typer.echo(f"Trace written to {trace}", err=True)
        else:
            rows = [simulate(sim_config, baseline=baseline)[0]]
    except (SimulationError, OSError) as e:
        typer.echo(f"Error: {e}", err=True)
        raise typer.Exit(code=EXIT_RUNTIME)
    _emit(rows, output)


def sim_sweep(
    config: Path = typer.Option(None, "--config", help="Config file with one 'key = value' per line"),
    preset: str = typer.Option(None, "--preset", help="Named preset: default, fig12, fig13, table2"),
    nodes: str = typer.Option("10..40", "--nodes", help="Inclusive node-count range"),
    step: int = typer.Option(SWEEP_STEP, "--step", help="Node-count step"),
    runs: int = typer.Option(
        None, "--runs", help=f"Seeds per node count (default {SWEEP_RUNS}); bench runs for the table2 preset"
    ),
    seed: int = typer.Option(None, "--seed", help="First seed; overrides the config"),
    workers: int = typer.Option(1, "--workers", help="Worker processes"),
    database: Path = typer.Option(
        None,
        "--database",
        help=f"Archive every run in this SQLite file (e.g. {DEFAULT_DATABASE_PATH})",
    ),
    runs_output: Path = typer.Option(None, "--runs-output", help="Also write the per-run rows to this CSV"),
    output: Path = typer.Option(None, "--output", help="CSV file to write instead of stdout"),
):
    """
    Average seeded runs per node count, with and without aggregation.
    """
    sim_config = _load(config, preset, seed=seed)
    bench = sim_config.experiment == "verification_bench"
    if runs is None:
        runs = sim_config.bench_runs if bench else SWEEP_RUNS
    if runs < 1 or workers < 1:
        typer.echo("Error: --runs and --workers must be positive", err=True)
        raise typer.Exit(code=EXIT_USAGE)

    if bench:
        try:
            rows = bench_rows(sim_config, runs=runs)
        except (SimulationError, ValueError) as e:
            typer.echo(f"Error: {e}", err=True)
            raise typer.Exit(code=EXIT_RUNTIME)
        _emit(rows, output)
        return

    try:
        lo, hi = parse_range(nodes)
        node_counts = stepped(lo, hi, step)
    except ValueError as e:
        typer.echo(f"Error: {e}", err=True)
        raise typer.Exit(code=EXIT_USAGE)
    if lo < 1:
        typer.echo("Error: node counts must be positive", err=True)
        raise typer.Exit(code=EXIT_USAGE)

    typer.echo(
        f"Sweeping node counts {node_counts} over {runs} seed(s) from {sim_config.seed}...",
        err=True,
    )
    try:
        rows = sweep(sim_config, node_counts, runs, sim_config.seed, workers=workers)
    except (SimulationError, ConfigError) as e:
        typer.echo(f"Error: {e}", err=True)
        raise typer.Exit(code=EXIT_RUNTIME)

    if runs_output is not None:
        write_csv(rows, runs_output)
        typer.echo(f"Wrote {len(rows)} run row(s) to {runs_output}", err=True)
    if database is not None:
        init_database(database)
        with get_db_session() as session:
            sweep_id = archive_runs(session, sim_config, rows)
        typer.echo(f"Archived sweep {sweep_id} in {database}", err=True)

    _emit(summarize(rows), output)
