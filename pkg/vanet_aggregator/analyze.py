#!/usr/bin/env python3
"""
Analysis commands.
Emit the verification-probability curve, the packet sizing table and the
cell geometry of a road as CSV.
"""

from pathlib import Path

import typer

from vanet_aggregator.config import DANGER_RADIUS_M, LANES_PER_DIRECTION, SPEED_LIMIT_KMH
from vanet_aggregator.geo import GeoError
from vanet_aggregator.services.analysis_service import cell_summary, probability_rows, sizing_rows
from vanet_aggregator.utils.csv_utils import write_csv
from vanet_aggregator.utils.range_utils import parse_int_list, parse_range

EXIT_USAGE = 2


def _emit(rows: list[dict], output: Path | None) -> None:
    text = write_csv(rows, output)
    if output is None:
        typer.echo(text, nl=False)
    else:
        typer.echo(f"Wrote {len(rows)} row(s) to {output}", err=True)


def analyze_prob(
    k: str = typer.Option("6,10", "--k", help="Comma-separated values of k"),
    n: str = typer.Option("2..70", "--n", help="Inclusive range of signature counts, within 2..200"),
    output: Path = typer.Option(None, "--output", help="CSV file to write instead of stdout"),
):
    """
    Probability that at least two signatures get checked, for every k and n.
    """
    try:
        ks = parse_int_list(k)
        n_lo, n_hi = parse_range(n)
        rows = probability_rows(ks, n_lo, n_hi)
    except ValueError as e:
        typer.echo(f"Error: {e}", err=True)
        raise typer.Exit(code=EXIT_USAGE)
    _emit(rows, output)


def analyze_sizing(
    output: Path = typer.Option(None, "--output", help="CSV file to write instead of stdout"),
):
    """
    Maximum signatures per packet for every digest and packet size.
    """
    _emit(sizing_rows(), output)


def analyze_cells(
    lanes: int = typer.Option(LANES_PER_DIRECTION, "--lanes", help="Lanes per direction"),
    speed: float = typer.Option(SPEED_LIMIT_KMH, "--speed", help="Speed limit in km/h"),
    danger_radius: float = typer.Option(DANGER_RADIUS_M, "--danger-radius", help="Danger radius in meters"),
    output: Path = typer.Option(None, "--output", help="CSV file to write instead of stdout"),
):
    """
    Cell size, area and maximum group size for a road, and the danger-zone cells.
    """
    try:
        row = cell_summary(lanes, speed, danger_radius)
    except GeoError as e:
        typer.echo(f"Error: {e}", err=True)
        raise typer.Exit(code=EXIT_USAGE)
    _emit([row], output)
