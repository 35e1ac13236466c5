"""
This module reads the CSV inputs of the commands and writes their CSV artifacts.

Inputs have a header row; lines starting with `#` are ignored. Outputs start with a
`# ` provenance line, followed by the header row, comma separated with LF line endings.

Functions:
    read_losses: Loss vector from a one-column CSV.
    read_matrix: Numeric matrix from a CSV.
    read_regression: Covariates (x_1..x_m) and response (last column) from a CSV.
    render_rows: CSV text for a list of row records.
    write_rows: Writes CSV text to a file.
"""
from pathlib import Path
from typing import Iterable, List, Mapping, Optional, Tuple

import numpy as np
import pandas as pd

from helpers.errors import BadSpec, EmptyInput, ShapeMismatch


def read_matrix(path: str) -> np.ndarray:
    """
    Read a numeric CSV with a header row.

    Raises:
        BadSpec: If the file is missing, malformed or holds non-numeric cells.
        EmptyInput: If the file has no columns or no data rows.
    """
    if not Path(path).is_file():
        raise BadSpec(f"input file not found: {path}")
    try:
        frame = pd.read_csv(path, comment="#")
    except pd.errors.EmptyDataError as exc:
        raise EmptyInput(f"{path} is empty") from exc
    except pd.errors.ParserError as exc:
        raise BadSpec(f"{path} is not a valid CSV file: {exc}") from exc
    if frame.empty:
        raise EmptyInput(f"{path} has no data rows")
    try:
        return frame.to_numpy(dtype=float)
    except ValueError as exc:
        raise BadSpec(f"{path} holds non-numeric values") from exc


def read_losses(path: str) -> np.ndarray:
    """
    Read a loss vector from the first column of a CSV.
    """
    return read_matrix(path)[:, 0]


def read_regression(path: str) -> Tuple[np.ndarray, np.ndarray]:
    """
    Read regression data with columns (x_1, ..., x_m, y).

    Raises:
        ShapeMismatch: If there are fewer than two columns.
    """
    data = read_matrix(path)
    if data.shape[1] < 2:
        raise ShapeMismatch("regression input needs at least one covariate and a response")
    return data[:, :-1], data[:, -1]


def render_rows(rows: Iterable[Mapping], columns: List[str], provenance: str) -> str:
    """
    Render rows as CSV text preceded by a provenance comment.

    Args:
        rows: Row records keyed by column name.
        columns: Column order of the header.
        provenance: Invocation and seed recorded in the first line.

    Returns:
        str: the CSV document.
    """
    frame = pd.DataFrame(list(rows), columns=columns)
    body = frame.to_csv(index=False, lineterminator="\n")
    return f"# {provenance}\n{body}"


def write_rows(text: str, path: Optional[str]) -> None:
    """
    Write rendered CSV text to `path` (UTF-8, LF endings).
    """
    with open(path, "w", encoding="utf-8", newline="\n") as handle:
        handle.write(text)
