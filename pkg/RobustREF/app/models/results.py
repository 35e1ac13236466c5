"""
This module defines the result records returned by the tilt, solver and oracle services.

Classes:
    TiltSolution: Worst-case measure of the inner problem at a fixed prediction.
    SolverDiagnostics: Iteration counters and flags of an outer solve.
    REFResult: Robust elicitable functional and its worst-case value.
    RegressionFit: Robust regression coefficients.
    OracleReport: Output of a brute-force verifier.
"""
from typing import Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field


class TiltSolution(BaseModel):
    """
    Represents the exponentially tilted worst-case measure at one prediction.

    Attributes:
        eta_star (float): Tilt parameter solving d(eta) = epsilon (+inf when degenerate).
        tilted_weights (np.ndarray): Worst-case probabilities of the atoms.
        kl_achieved (float): KL divergence of the tilted weights from the baseline.
        value (float): Worst-case expected score J.
        pi_hat (float): Baseline mass of the atoms attaining the maximal score.
        degenerate (bool): True when epsilon >= log(1 / pi_hat) and the measure sits
            on the maximal-score atoms.
        iterations (int): Function evaluations spent by the root finder.
    """
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    eta_star: float = Field(..., ge=0)
    tilted_weights: np.ndarray
    kl_achieved: float = Field(..., ge=0)
    value: float
    pi_hat: float = Field(..., gt=0, le=1)
    degenerate: bool = False
    iterations: int = 0


class SolverDiagnostics(BaseModel):
    """
    Diagnostics of an outer minimisation.

    Attributes:
        iterations (int): Outer iterations (bisection steps, simplex iterations, descent steps).
        derivative_evals (int): Evaluations of the outer derivative or objective.
        converged (bool): Whether the stopping rule was met.
        degenerate_hit (bool): Whether some evaluation fell in the degenerate regime.
        quantile_crossing (bool): For the (VaR, ES) pair, whether z1 > z2.
        restart_spread (Optional[float]): Largest distance between restart minimisers
            relative to the scale, for multi-start solves.
    """
    iterations: int = 0
    derivative_evals: int = 0
    converged: bool = True
    degenerate_hit: bool = False
    quantile_crossing: bool = False
    restart_spread: Optional[float] = None


class REFResult(BaseModel):
    """
    Represents a robust elicitable functional.

    Attributes:
        z_star (np.ndarray): Minimiser (length 1, or (VaR, ES) for the pair).
        eta_star (float): Tilt parameter at the minimiser.
        value (float): Worst-case expected score at the minimiser.
        baseline_value (np.ndarray): Classical (epsilon = 0) solution used as warm start.
        tilted_weights (np.ndarray): Worst-case measure at the minimiser.
        diagnostics (SolverDiagnostics): Solver diagnostics.
    """
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    z_star: np.ndarray
    eta_star: float
    value: float
    baseline_value: np.ndarray
    tilted_weights: np.ndarray
    diagnostics: SolverDiagnostics = Field(default_factory=SolverDiagnostics)

    @property
    def dim(self) -> int:
        """Dimension of the minimiser."""
        return int(self.z_star.size)


class RegressionFit(BaseModel):
    """
    Represents robust regression coefficients.

    Attributes:
        beta (np.ndarray): Coefficients, one per design column.
        epsilon (float): KL tolerance of the fit.
        mse (float): In-sample mean squared error under the baseline measure.
        eta_star (float): Tilt parameter at the fitted coefficients.
        value (float): Worst-case expected score at the fitted coefficients.
        iterations (int): Descent steps taken.
        converged (bool): False when the iteration cap was hit; beta is then the best iterate.
    """
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    beta: np.ndarray
    epsilon: float = Field(..., ge=0)
    mse: float = Field(..., ge=0)
    eta_star: float = Field(..., ge=0)
    value: float
    iterations: int = 0
    converged: bool = True


class OracleReport(BaseModel):
    """
    Represents the answer of a brute-force verifier.

    Attributes:
        value (float): Best objective value found.
        argmax_weights (Optional[np.ndarray]): Maximising probability vector (inner oracle).
        argmin_z (Optional[float]): Minimising grid point (outer oracle).
        grid_resolution (float): Grid step, or 0 for the inner oracle.
        runtime_ms (int): Wall-clock time spent.
    """
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    value: float = Field(..., allow_inf_nan=False)
    argmax_weights: Optional[np.ndarray] = None
    argmin_z: Optional[float] = None
    grid_resolution: float = 0.0
    runtime_ms: int = 0
