#!/usr/bin/env python3
"""
Main entry point for the vanet-aggregator CLI.
Sets up and wires together all Typer applications.
"""

import logging

import typer

from vanet_aggregator.analyze import analyze_cells, analyze_prob, analyze_sizing
from vanet_aggregator.simulate import sim_run, sim_sweep

app = typer.Typer(no_args_is_help=True)

# analyze prob | sizing | cells
analyze_app = typer.Typer(no_args_is_help=True, help="Closed-form tables")
analyze_app.command("prob")(analyze_prob)
analyze_app.command("sizing")(analyze_sizing)
analyze_app.command("cells")(analyze_cells)
app.add_typer(analyze_app, name="analyze")

# sim run | sweep
sim_app = typer.Typer(no_args_is_help=True, help="Network simulations")
sim_app.command("run")(sim_run)
sim_app.command("sweep")(sim_sweep)
app.add_typer(sim_app, name="sim")


@app.callback()
def main(
    verbose: int = typer.Option(0, "--verbose", "-v", count=True, help="Log more; repeat for debug output"),
):
    """
    Signature aggregation for vehicular warning messages.
    """
    level = logging.WARNING
    if verbose == 1:
        level = logging.INFO
    elif verbose > 1:
        level = logging.DEBUG
    logging.basicConfig(level=level, format="%(asctime)s %(levelname)s %(name)s: %(message)s")


if __name__ == "__main__":
    app()
