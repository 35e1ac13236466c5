"""
This module defines the `murphy` subcommand: the robust functional across homogeneity
degrees, or across a parameter of the baseline distribution at fixed b.

Output columns: b, epsilon, z_star (b, param, epsilon, z_star with --vary other than b).
"""
import click

from commands.options import common_options, emit, run_command, score_options
from models.experiment import MurphyConfig
from services.experiment_service import ExperimentService


@click.command(name="murphy")
@score_options
@common_options
@click.option("--b-grid", default=None, help="Comma separated homogeneity degrees.")
@click.option("--vary", type=click.Choice(["b", "shape1", "shape2", "lambda"]), default=None)
@click.option("--param-grid", default=None, help="Comma separated parameter values.")
@click.option("--dist", type=click.Choice(["texp", "beta"]), default=None)
@click.option("--rate", type=float, default=None, help="TExp rate.")
@click.option("--shape1", type=float, default=None, help="First Beta shape.")
@click.option("--shape2", type=float, default=None, help="Second Beta shape.")
@click.option("--n", type=int, default=None, help="Sample size.")
@click.option("--input", type=click.Path(dir_okay=False), default=None,
              help="CSV of losses used instead of a generated sample.")
@click.pass_context
def murphy_command(ctx, **flags):
    """
    Sweep the robust functional over b or over a distribution parameter.
    """
    run_command(ctx, MurphyConfig, flags,
                lambda config, line: emit(*ExperimentService.murphy(config), line))
