"""
This module defines the `check` subcommand: oracle cross-checks.

Output columns: check, epsilon, solver, oracle, abs_diff, ok.
"""
import click

from commands.options import common_options, emit, run_command, score_options
from models.experiment import CheckConfig
from services.experiment_service import ExperimentService


@click.command(name="check")
@score_options
@common_options
@click.option("--input", type=click.Path(dir_okay=False), default=None,
              help="CSV of losses; the atoms 0, 1, 5 when omitted.")
@click.option("--grid-points", type=int, default=None, help="Points of the grid oracle.")
@click.pass_context
def check_command(ctx, **flags):
    """
    Compare the solvers with the brute-force oracles.
    """
    run_command(ctx, CheckConfig, flags,
                lambda config, line: emit(*ExperimentService.check(config), line))
