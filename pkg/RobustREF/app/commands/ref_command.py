"""
This module defines the `ref` subcommand: the robust functional of a loss sample for a
list of tolerances.

Output columns: epsilon, z_star[, z2_star], eta_star, value, degenerate_hit[, quantile_crossing].
"""
import click

from commands.options import common_options, emit, run_command, score_options
from helpers.csv_io import render_rows, write_rows
from models.experiment import RefConfig
from services.experiment_service import ExperimentService


@click.command(name="ref")
@score_options
@common_options
@click.option("--input", type=click.Path(dir_okay=False), default=None,
              help="CSV of losses (header row, one column).")
@click.option("--scale", type=float, default=None,
              help="Multiply losses by this factor before solving; results are mapped back.")
@click.option("--weights-output", type=click.Path(dir_okay=False), default=None,
              help="Write the worst-case weights of every atom per tolerance.")
@click.pass_context
def ref_command(ctx, **flags):
    """
    Robust elicitable functional of the losses in --input.
    """
    def runner(config: RefConfig, line: str) -> str:
        columns, rows, weight_columns, weight_rows = ExperimentService.ref(config)
        if config.weights_output is not None:
            write_rows(render_rows(weight_rows, weight_columns, line), config.weights_output)
        return emit(columns, rows, line)

    run_command(ctx, RefConfig, flags, runner)
