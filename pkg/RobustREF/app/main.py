"""
Main module for the command-line application.

This module sets up the click group, configures logging from the settings or the
--log-level flag, and registers the experiment subcommands.
"""
import click

from commands.check_command import check_command
from commands.murphy_command import murphy_command
from commands.ref_command import ref_command
from commands.regress_command import regress_command
from commands.reinsurance_command import reinsurance_command
from helpers.logging_setup import configure_logging
from settings import get_settings


@click.group()
@click.option("--log-level", type=click.Choice(["DEBUG", "INFO", "WARNING", "ERROR"],
                                               case_sensitive=False),
              default=None, help="Logging level; REF_LOG_LEVEL when omitted.")
def cli(log_level):
    """
    Robust elicitable functionals under Kullback-Leibler uncertainty.
    """
    configure_logging(log_level or get_settings().log_level)


cli.add_command(ref_command)
cli.add_command(murphy_command)
cli.add_command(reinsurance_command)
cli.add_command(regress_command)
cli.add_command(check_command)


if __name__ == "__main__":
    cli()  # pylint: disable=no-value-for-parameter
