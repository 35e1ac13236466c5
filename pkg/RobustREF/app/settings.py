"""
This module loads the runtime settings of the robust elicitable functional toolkit.

Settings come from environment variables (optionally through a `.env` file) with
built-in defaults. Experiment parameters can additionally be read from a flat
key/value config file; flags given on the command line override both.

Functions:
    get_settings: Returns the settings resolved from the environment.
    load_config_file: Reads a flat key/value config file.
    merge_options: Applies the precedence flags > config file > defaults.
"""
import os
from functools import lru_cache
from pathlib import Path
from typing import Any, Dict, Mapping, Optional

from dotenv import dotenv_values, load_dotenv
from pydantic import BaseModel, Field

from helpers.errors import BadSpec

# Load environment variables from .env file
load_dotenv()


class Settings(BaseModel):
    """
    Process-wide defaults.

    Attributes:
        seed (int): Default seed for every random experiment.
        workers (int): Number of worker processes for replicate and grid runs.
        log_level (str): Logging level name.
        tilt_tol (float): Target accuracy |d(eta) - epsilon| of the inner root finder.
        bisection_tol (float): Relative bracket width at which the 1-d solver stops.
        max_iter (int): Iteration cap of the iterative solvers.
    """
    seed: int = Field(20240906, ge=0)
    workers: int = Field(1, ge=1)
    log_level: str = "WARNING"
    tilt_tol: float = Field(1e-10, gt=0)
    bisection_tol: float = Field(1e-10, gt=0)
    max_iter: int = Field(10_000, gt=0)


@lru_cache(maxsize=1)
def get_settings() -> Settings:
    """
    Build the settings from environment variables.

    Returns:
        Settings: the resolved settings.
    """
    return Settings(
        seed=int(os.getenv("REF_SEED", "20240906")),
        workers=int(os.getenv("REF_WORKERS", "1")),
        log_level=os.getenv("REF_LOG_LEVEL", "WARNING"),
        tilt_tol=float(os.getenv("REF_TILT_TOL", "1e-10")),
        bisection_tol=float(os.getenv("REF_BISECTION_TOL", "1e-10")),
        max_iter=int(os.getenv("REF_MAX_ITER", "10000")),
    )


def load_config_file(path: Optional[str]) -> Dict[str, str]:
    """
    Read a flat key/value config file (`key=value` per line, `#` comments).

    Args:
        path (Optional[str]): Location of the file; None yields an empty mapping.

    Returns:
        Dict[str, str]: lower-cased keys mapped to their raw string values.

    Raises:
        BadSpec: If the file does not exist.
    """
    if path is None:
        return {}
    if not Path(path).is_file():
        raise BadSpec(f"config file not found: {path}")
    values = dotenv_values(path)
    return {key.lower(): value for key, value in values.items() if value is not None}


def merge_options(flags: Mapping[str, Any], config: Mapping[str, Any]) -> Dict[str, Any]:
    """
    Combine command-line flags with config-file values.

    A flag that was not given (None) falls back to the config-file value; keys absent
    from both are left for the model defaults.

    Args:
        flags (Mapping[str, Any]): Values parsed from the command line.
        config (Mapping[str, Any]): Values read from the config file.

    Returns:
        Dict[str, Any]: the merged options.
    """
    merged = {key: value for key, value in config.items() if value not in (None, "")}
    for key, value in flags.items():
        if value is not None:
            merged[key] = value
    return merged
