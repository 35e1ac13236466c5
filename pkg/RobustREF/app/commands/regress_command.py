"""
This module defines the `regress` subcommand: robust regression coefficients.

Output columns: model, epsilon, beta_0..beta_m, mse, eta_star, converged.
"""
import click

from commands.options import common_options, emit, run_command, score_options
from models.experiment import RegressConfig
from services.experiment_service import ExperimentService


@click.command(name="regress")
@score_options
@common_options
@click.option("--model", default=None, help="Comma separated built-in datasets: A, B, C, A40, A80, A120.")
@click.option("--input", type=click.Path(dir_okay=False), default=None,
              help="CSV with columns x_1..x_m, y.")
@click.pass_context
def regress_command(ctx, **flags):
    """
    Robust regression with an intercept for every tolerance.
    """
    run_command(ctx, RegressConfig, flags,
                lambda config, line: emit(*ExperimentService.regress(config), line))
