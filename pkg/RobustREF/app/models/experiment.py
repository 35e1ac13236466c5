"""
This module defines the option records of the experiment commands.

Classes:
    ExperimentConfig: Options shared by every command.
    ScoreOptions: Flat score-family fields.
    RefConfig, MurphyConfig, ReinsuranceConfig, RegressConfig, CheckConfig: Per-command options.
"""
from enum import Enum
from typing import List, Optional

from pydantic import BaseModel, Field, field_validator, model_validator

from settings import get_settings


def _split(value):
    if isinstance(value, str):
        return [item.strip() for item in value.split(",") if item.strip()]
    if isinstance(value, (int, float)):
        return [value]
    return value


class ExperimentConfig(BaseModel):
    """
    Options shared by every command.

    Attributes:
        eps (List[float]): KL tolerances, each >= 0, solved in increasing order.
        seed (int): Seed of the random streams.
        workers (int): Worker processes for independent cells.
        output (Optional[str]): Output CSV path; None prints to stdout.
    """
    eps: List[float] = Field(default_factory=lambda: [0.0], min_length=1)
    seed: int = Field(default_factory=lambda: get_settings().seed, ge=0)
    workers: int = Field(default_factory=lambda: get_settings().workers, ge=1)
    output: Optional[str] = None

    @field_validator("eps", mode="before")
    @classmethod
    def split_eps(cls, value):
        """
        Accept a comma separated string such as "0,0.1,0.3".
        """
        return _split(value)

    @field_validator("eps")
    @classmethod
    def validate_eps(cls, value: List[float]) -> List[float]:
        """
        Check that every tolerance is nonnegative and return them sorted.
        """
        if any(eps < 0 for eps in value):
            raise ValueError("epsilon values must be nonnegative")
        return sorted(set(value))


class ScoreOptions(BaseModel):
    """
    Flat score-family fields as given on the command line or in a config file.
    """
    score: str = "mean"
    b: float = 2.0
    alpha: Optional[float] = None
    tau: Optional[float] = None
    d: Optional[float] = None
    d1: Optional[float] = None
    d2: Optional[float] = None
    c0: Optional[float] = None
    c1: Optional[float] = None

    def score_mapping(self) -> dict:
        """Fields in the form expected by `score_from_mapping`."""
        return self.model_dump(include={"score", "b", "alpha", "tau", "d", "d1", "d2", "c0", "c1"})


class RefConfig(ExperimentConfig, ScoreOptions):
    """
    Options of `ref`: robust functional of a loss sample for every tolerance.
    """
    input: str
    scale: float = Field(1.0, gt=0)
    weights_output: Optional[str] = None


class SweepParameter(str, Enum):
    """
    Enumeration for the quantity a Murphy sweep varies.
    """
    B = "b"
    SHAPE1 = "shape1"
    SHAPE2 = "shape2"
    LAMBDA = "lambda"


class MurphyConfig(ExperimentConfig, ScoreOptions):
    """
    Options of `murphy`: robust functional against b or a distribution parameter.

    Attributes:
        b_grid (List[float]): Degrees swept when vary = b.
        vary (SweepParameter): Swept quantity.
        param_grid (List[float]): Parameter values swept otherwise.
        dist (str): Baseline family when no input is given: `texp` or `beta`.
        rate (float): TExp rate.
        shape1, shape2 (float): Beta shapes.
        n (int): Sample size.
        input (Optional[str]): Loss CSV used instead of a generated sample.
    """
    b_grid: List[float] = Field(default_factory=lambda: [0.0, 0.5, 1.0, 1.5, 2.0, 2.5, 3.0],
                                min_length=1)
    vary: SweepParameter = SweepParameter.B
    param_grid: List[float] = Field(default_factory=lambda: [1.0, 2.0, 3.0, 4.0, 5.0],
                                    min_length=1)
    dist: str = "texp"
    rate: float = Field(2.0, gt=0)
    shape1: float = Field(2.0, gt=0)
    shape2: float = Field(2.0, gt=0)
    n: int = Field(30_000, gt=0)
    input: Optional[str] = None

    @field_validator("b_grid", "param_grid", mode="before")
    @classmethod
    def split_grid(cls, value):
        """
        Accept comma separated grids.
        """
        return _split(value)

    @model_validator(mode="after")
    def validate_sweep(self):
        """
        Check that the swept parameter belongs to the baseline family.
        """
        if self.dist not in ("texp", "beta"):
            raise ValueError("dist must be texp or beta")
        if self.vary in (SweepParameter.SHAPE1, SweepParameter.SHAPE2) and self.dist != "beta":
            raise ValueError("shape sweeps need dist=beta")
        if self.vary == SweepParameter.LAMBDA and self.dist != "texp":
            raise ValueError("lambda sweeps need dist=texp")
        if self.vary != SweepParameter.B and self.input is not None:
            raise ValueError("parameter sweeps generate their own samples")
        return self


class ReinsuranceConfig(ExperimentConfig):
    """
    Options of `reinsurance`: robust (VaR, ES) of simulated reinsurance losses.
    """
    eps: List[float] = Field(default_factory=lambda: [0.6, 0.7, 0.8, 0.9], min_length=1)
    alphas: List[float] = Field(default_factory=lambda: [0.9, 0.975], min_length=1)
    b: float = 0.5
    n: int = Field(10_000, gt=0)
    replicates: int = Field(100, gt=0)
    restarts: int = Field(5, ge=0)

    @field_validator("alphas", mode="before")
    @classmethod
    def split_alphas(cls, value):
        """
        Accept a comma separated list of levels.
        """
        return _split(value)


class RegressConfig(ExperimentConfig, ScoreOptions):
    """
    Options of `regress`: robust regression on a CSV or on the built-in datasets.
    """
    eps: List[float] = Field(default_factory=lambda: [0.0, 1.0, 5.0, 10.0], min_length=1)
    model: List[str] = Field(default_factory=lambda: ["A", "B", "C"], min_length=1)
    input: Optional[str] = None

    @field_validator("model", mode="before")
    @classmethod
    def split_models(cls, value):
        """
        Accept a comma separated list of model names.
        """
        return [name.upper() for name in _split(value)]


class CheckConfig(ExperimentConfig, ScoreOptions):
    """
    Options of `check`: oracle cross-checks of the tilt and the one-dimensional solver.
    """
    eps: List[float] = Field(default_factory=lambda: [0.01, 0.05, 0.1, 0.3], min_length=1)
    input: Optional[str] = None
    grid_points: int = Field(1000, ge=100)
