"""
This module defines the `reinsurance` subcommand: robust (VaR, ES) of simulated
reinsurance losses over replicates.

Output columns: replicate, alpha, epsilon, var, es, rejected.
"""
import click

from commands.options import common_options, emit, run_command
from models.experiment import ReinsuranceConfig
from services.experiment_service import ExperimentService


@click.command(name="reinsurance")
@common_options
@click.option("--alphas", default=None, help="Comma separated levels.")
@click.option("--b", type=float, default=None, help="Homogeneity degree of the (VaR, ES) score.")
@click.option("--n", type=int, default=None, help="Losses per replicate.")
@click.option("--replicates", type=int, default=None, help="Number of replicates.")
@click.option("--restarts", type=int, default=None, help="Nelder-Mead restarts per solve.")
@click.pass_context
def reinsurance_command(ctx, **flags):
    """
    Robust (VaR, ES) of the three-line reinsurance portfolio.
    """
    run_command(ctx, ReinsuranceConfig, flags,
                lambda config, line: emit(*ExperimentService.reinsurance(config), line))
