"""
This module holds the option decorators and the execution wrapper shared by the
subcommands.

Functions:
    common_options: Adds --eps, --seed, --workers, --output and --config.
    score_options: Adds the score-family flags.
    run_command: Merges flags with the config file, validates, runs and reports errors.
"""
from typing import Callable, Dict, Type

import click
from pydantic import BaseModel, ValidationError

from helpers.csv_io import render_rows, write_rows
from helpers.errors import EXIT_VALIDATION, REFError
from settings import load_config_file, merge_options


def common_options(func: Callable) -> Callable:
    """
    Add the options every subcommand accepts.
    """
    decorators = [
        click.option("--eps", default=None, help="Comma separated KL tolerances, e.g. 0,0.1,0.3."),
        click.option("--seed", type=int, default=None, help="Seed of the random streams."),
        click.option("--workers", type=int, default=None, help="Worker processes."),
        click.option("--output", type=click.Path(dir_okay=False), default=None,
                     help="Output CSV; stdout when omitted."),
        click.option("--config", "config_path", type=click.Path(dir_okay=False), default=None,
                     help="key=value file with option defaults."),
    ]
    for decorator in reversed(decorators):
        func = decorator(func)
    return func


def score_options(func: Callable) -> Callable:
    """
    Add the flags describing a score family.
    """
    decorators = [
        click.option("--score", type=click.Choice(["mean", "var", "expectile", "vares"]),
                     default=None, help="Score family."),
        click.option("--b", type=float, default=None, help="Homogeneity degree."),
        click.option("--alpha", type=float, default=None, help="VaR / ES level."),
        click.option("--tau", type=float, default=None, help="Expectile level."),
        click.option("--d", type=float, default=None),
        click.option("--d1", type=float, default=None),
        click.option("--d2", type=float, default=None),
        click.option("--c0", type=float, default=None),
        click.option("--c1", type=float, default=None),
    ]
    for decorator in reversed(decorators):
        func = decorator(func)
    return func


def provenance(ctx: click.Context, flags: Dict, seed: int) -> str:
    """
    Describe the invocation: command path, the effective options in sorted order and the seed.

    `flags` holds the merged command-line and config-file values plus the config path.
    """
    given = " ".join(f"--{key}={value}" for key, value in sorted(flags.items())
                     if value is not None)
    return f"{ctx.command_path} {given} seed={seed}".replace("  ", " ")


def run_command(ctx: click.Context, config_cls: Type[BaseModel], flags: Dict,
                runner: Callable) -> None:
    """
    Build the option record and run a harness, mapping failures to exit codes.

    Args:
        ctx (click.Context): Current click context.
        config_cls: Option record class of the subcommand.
        flags (Dict): Parsed flags; `config_path` names the optional config file.
        runner: Callable taking the option record and the provenance line and
            returning the CSV text.

    Exit codes are 2 for validation errors and 1 for numerical failures.
    """
    flags = dict(flags)
    config_path = flags.pop("config_path", None)
    try:
        options = merge_options(flags, load_config_file(config_path))
        config = config_cls.model_validate(options)
        recorded = dict(options, config=config_path)
        text = runner(config, provenance(ctx, recorded, config.seed))
    except ValidationError as exc:
        click.echo(f"error: {exc}", err=True)
        ctx.exit(EXIT_VALIDATION)
    except REFError as exc:
        click.echo(f"error: {exc.detail['error']}: {exc.message}", err=True)
        ctx.exit(exc.exit_code)
    if config.output is None:
        click.echo(text, nl=False)
    else:
        write_rows(text, config.output)


def emit(columns, rows, line: str) -> str:
    """
    Render rows with the provenance line.
    """
    return render_rows(rows, columns, line)
