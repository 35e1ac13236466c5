"""
Shared fixtures of the test suite.

The application modules use flat imports (`from models.score import ScoreFamily`), so
the `app` directory is put on the import path here.
"""
import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "app"))


@pytest.fixture
def rng():
    return np.random.default_rng(20240906)


@pytest.fixture
def write_csv(tmp_path):
    """
    Write a CSV with a header row and return its path.
    """
    def _write(name, header, rows):
        path = tmp_path / name
        lines = [",".join(header)] + [",".join(str(value) for value in row) for row in rows]
        path.write_text("\n".join(lines) + "\n", encoding="utf-8")
        return str(path)

    return _write
