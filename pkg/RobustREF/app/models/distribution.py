"""
This module defines the distribution models used by the solvers and the experiment
harnesses.

Classes:
    FunctionalKind: Enumeration of the classical functionals of a sample.
    EmpiricalDistribution: Weighted atoms forming the baseline measure.
    TExpSpec, BetaSpec, LogNormalSpec, ParetoMMSpec: Marginal distribution specifications.
    GumbelCopulaSpec, StudentTCopulaSpec: Copula specifications.
    LayerSpec: Deductible and limit of one reinsurance layer.

Attributes:
    DistributionSpec: Discriminated union of the marginal specifications.
    CopulaSpec: Discriminated union of the copula specifications.
"""
import math
from enum import Enum
from typing import Annotated, List, Literal, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from helpers.errors import BadSpec, DomainError, EmptyInput, LengthMismatch

WEIGHT_SUM_TOL = 1e-12


class FunctionalKind(str, Enum):
    """
    Enumeration for the classical functionals of a weighted sample.

    Attributes:
        MEAN (str): Expectation.
        VAR (str): Value-at-Risk, lower quantile (infimum convention).
        ES (str): Expected Shortfall, tail mean with exact tail mass 1 - alpha.
        EXPECTILE (str): Root of the asymmetric-mean identification equation.
    """
    MEAN = "mean"
    VAR = "var"
    ES = "es"
    EXPECTILE = "expectile"


class EmpiricalDistribution(BaseModel):
    """
    Represents the baseline measure as weighted atoms.

    Attributes:
        atoms (np.ndarray): Observations y_i, finite.
        weights (np.ndarray): Nonnegative weights w_i summing to one.
    """
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    atoms: np.ndarray
    weights: np.ndarray

    @field_validator("atoms", "weights", mode="before")
    @classmethod
    def as_float_array(cls, value):
        """
        Convert list-like input to a one-dimensional float array.
        """
        return np.asarray(value, dtype=float).ravel()

    @model_validator(mode="after")
    def validate_measure(self):
        """
        Check that the atoms are finite and the weights form a probability vector.

        Raises:
            EmptyInput: If there are no atoms.
            LengthMismatch: If atoms and weights differ in length.
            DomainError: If an atom is not finite.
            BadSpec: If a weight is negative or the weights do not sum to one.
        """
        if self.atoms.size == 0:
            raise EmptyInput("the distribution has no atoms")
        if self.atoms.size != self.weights.size:
            raise LengthMismatch(
                f"{self.atoms.size} atoms but {self.weights.size} weights")
        if not np.all(np.isfinite(self.atoms)):
            raise DomainError("atoms must be finite")
        if np.any(self.weights < 0) or not np.all(np.isfinite(self.weights)):
            raise BadSpec("weights must be finite and nonnegative")
        if abs(self.weights.sum() - 1.0) > WEIGHT_SUM_TOL:
            raise BadSpec(f"weights sum to {self.weights.sum()!r}, not 1")
        return self

    @classmethod
    def uniform(cls, atoms) -> "EmpiricalDistribution":
        """
        Build the empirical measure putting mass 1/n on every observation.

        Args:
            atoms: Observations.

        Returns:
            EmpiricalDistribution: the uniform empirical measure.
        """
        atoms = np.asarray(atoms, dtype=float).ravel()
        if atoms.size == 0:
            raise EmptyInput("the distribution has no atoms")
        return cls(atoms=atoms, weights=np.full(atoms.size, 1.0 / atoms.size))

    def scaled(self, factor: float) -> "EmpiricalDistribution":
        """
        Distribution of factor * Y under the same weights.
        """
        return EmpiricalDistribution(atoms=self.atoms * factor, weights=self.weights)

    def shifted(self, offset: float) -> "EmpiricalDistribution":
        """
        Distribution of Y + offset under the same weights.
        """
        return EmpiricalDistribution(atoms=self.atoms + offset, weights=self.weights)

    @property
    def size(self) -> int:
        """Number of atoms."""
        return int(self.atoms.size)

    @property
    def is_degenerate(self) -> bool:
        """True when all atoms carrying mass coincide."""
        support = self.atoms[self.weights > 0]
        return bool(support.min() == support.max())


class TExpSpec(BaseModel):
    """
    Exponential distribution with rate `rate`, right truncated at its `trunc_q` quantile.

    Attributes:
        rate (float): Rate lambda of the untruncated exponential.
        trunc_q (float): Quantile level of the truncation point.
    """
    model_config = ConfigDict(frozen=True)

    kind: Literal["texp"] = "texp"
    rate: float = Field(..., gt=0, description="Rate must be positive")
    trunc_q: float = Field(0.95, gt=0, lt=1)

    @property
    def truncation_point(self) -> float:
        """Truncation point x_bar = G^{-1}(trunc_q) of the untruncated exponential."""
        return -math.log1p(-self.trunc_q) / self.rate


class BetaSpec(BaseModel):
    """
    Beta distribution with density proportional to x^(a-1) (1-x)^(b-1).
    """
    model_config = ConfigDict(frozen=True)

    kind: Literal["beta"] = "beta"
    a: float = Field(..., gt=0)
    b: float = Field(..., gt=0)


class LogNormalSpec(BaseModel):
    """
    Log-normal distribution: log X ~ Normal(mu, sigma^2).
    """
    model_config = ConfigDict(frozen=True)

    kind: Literal["lognormal"] = "lognormal"
    mu: float
    sigma: float = Field(..., gt=0)


class ParetoMMSpec(BaseModel):
    """
    Type-I Pareto distribution specified through its mean and standard deviation.
    """
    model_config = ConfigDict(frozen=True)

    kind: Literal["pareto"] = "pareto"
    mean: float = Field(..., gt=0)
    std: float = Field(..., gt=0)


DistributionSpec = Annotated[
    Union[TExpSpec, BetaSpec, LogNormalSpec, ParetoMMSpec], Field(discriminator="kind")
]


class GumbelCopulaSpec(BaseModel):
    """
    Gumbel copula of dimension `dim` with parameter theta >= 1.
    """
    model_config = ConfigDict(frozen=True)

    kind: Literal["gumbel"] = "gumbel"
    theta: float = Field(..., ge=1)
    dim: int = Field(2, ge=2)


class StudentTCopulaSpec(BaseModel):
    """
    Student-t copula with correlation matrix `corr` and `df` degrees of freedom.
    """
    model_config = ConfigDict(frozen=True)

    kind: Literal["t"] = "t"
    corr: List[List[float]]
    df: int = Field(..., gt=0)

    @model_validator(mode="after")
    def validate_corr(self):
        """
        Check that the correlation matrix is symmetric positive definite with unit diagonal.

        Raises:
            BadSpec: If the matrix is not a valid correlation matrix.
        """
        matrix = np.asarray(self.corr, dtype=float)
        if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1] or matrix.shape[0] < 2:
            raise BadSpec("corr must be a square matrix of size at least 2")
        if not np.allclose(matrix, matrix.T) or not np.allclose(np.diag(matrix), 1.0):
            raise BadSpec("corr must be symmetric with unit diagonal")
        if np.linalg.eigvalsh(matrix).min() <= 0:
            raise BadSpec("corr must be positive definite")
        return self

    @property
    def dim(self) -> int:
        """Dimension of the copula."""
        return len(self.corr)


CopulaSpec = Annotated[
    Union[GumbelCopulaSpec, StudentTCopulaSpec], Field(discriminator="kind")
]


class LayerSpec(BaseModel):
    """
    Represents one excess-of-loss layer: the reinsurer pays min((X - deductible)_+, limit).

    Attributes:
        deductible (float): Retention d_k >= 0.
        limit (float): Cover l_k > 0.
    """
    model_config = ConfigDict(frozen=True)

    deductible: float = Field(..., ge=0, allow_inf_nan=False)
    limit: float = Field(..., gt=0, allow_inf_nan=False)
