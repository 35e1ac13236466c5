"""
This module solves the outer problem: the prediction (or coefficient vector) that
minimises the worst-case expected score J.

### Functions:

- `j_derivative(family, dist, z, epsilon)`: dJ/dz as a tilted expectation of dS/dz.
- `ref_1d(family, dist, epsilon, bracket)`: One-dimensional REF by derivative-sign bisection.
- `ref_kd(family, dist, epsilon, init)`: (VaR, ES) REF by restarted Nelder-Mead.
- `robust_regression(family, X, y, epsilon)`: Robust regression coefficients by
  preconditioned gradient descent.
"""
import logging
import math
from typing import Optional, Tuple

import numpy as np
from scipy.optimize import minimize

from helpers.errors import (
    BadEpsilon,
    DomainError,
    LengthMismatch,
    NoSignChange,
    RankDeficient,
    ShapeMismatch,
)
from models.distribution import EmpiricalDistribution, FunctionalKind
from models.results import REFResult, RegressionFit, SolverDiagnostics, TiltSolution
from models.score import ActionDomain, ScoreFamily, ScoreKind
from services.dist_service import empirical_functional
from services.score_service import check_domain, evaluate, grad
from services.tilt_service import solve_tilt, worst_case_expectation
from settings import get_settings

logger = logging.getLogger(__name__)

ZERO_DERIVATIVE_RTOL = 1e-12
POSITIVE_FLOOR = 1e-9
MAX_BRACKET_EXPANSIONS = 60
KD_RESTARTS = 5
KD_SHRINK_TOL = 1e-9
ARMIJO_C = 1e-4
MAX_BACKTRACKS = 60
STALL_RTOL = 1e-15


def j_derivative(family: ScoreFamily, dist: EmpiricalDistribution, z: float, epsilon: float) -> float:
    """
    Derivative of the worst-case expected score at z.

    By the envelope argument dJ/dz is the expectation of dS/dz under the worst-case
    measure at z.

    ### Returns
    - float: dJ/dz (right derivative at the atoms of kinked families).

    ### Raises
    - ShapeMismatch: For a two-dimensional family.
    - DomainError: If z lies outside the action domain.
    """
    return _derivative(family, dist, z, epsilon)[0]


def ref_1d(
    family: ScoreFamily,
    dist: EmpiricalDistribution,
    epsilon: float,
    bracket: Optional[Tuple[float, float]] = None,
) -> REFResult:
    """
    One-dimensional robust elicitable functional.

    The derivative of J changes sign exactly once, so the minimiser is found by
    bisection on the sign of `j_derivative`. Derivatives within a relative 1e-12 of zero
    count as nonnegative, which returns the infimum of a flat argmin interval. For
    kinked families the result is snapped to the atom inside the final bracket.

    ### Args
    - family (ScoreFamily): A one-dimensional scoring family.
    - dist (EmpiricalDistribution): Baseline measure.
    - epsilon (float): KL tolerance.
    - bracket (Optional[Tuple[float, float]]): Initial bracket, defaults to the atom range.

    ### Returns
    - REFResult: z_star of length 1 with its tilt parameter and worst-case value.

    ### Raises
    - BadEpsilon: If epsilon is negative.
    - NoSignChange: If the derivative does not change sign in the expanded bracket.
    """
    _check_epsilon(epsilon)
    _require_dim(family, 1)
    settings = get_settings()
    baseline = _classical_value(family, dist)

    if dist.is_degenerate and family.zero_at_truth:
        constant = float(dist.atoms[dist.weights > 0][0])
        tilt = worst_case_expectation(family, dist, constant, epsilon)
        return _one_d_result(constant, tilt, baseline, SolverDiagnostics())

    positive = family.action_domain == ActionDomain.POSITIVE_REALS
    lo, hi = bracket if bracket is not None else (dist.atoms.min(), dist.atoms.max())
    scale = max(float(np.abs(dist.atoms).max()), abs(hi), abs(lo), 1e-300)
    if positive:
        lo = max(lo, POSITIVE_FLOOR * scale)
    if hi <= lo:
        hi = lo + max(abs(lo), 1.0)

    diagnostics = {"evals": 0, "degenerate": False}

    def upper(point: float) -> bool:
        derivative, magnitude, tilt = _derivative(family, dist, point, epsilon)
        diagnostics["evals"] += 1
        diagnostics["degenerate"] |= tilt.degenerate
        return derivative >= -ZERO_DERIVATIVE_RTOL * magnitude

    expansions = 0
    while upper(lo):
        width = hi - lo
        hi = lo
        lo = lo / 2.0 if positive else lo - width
        expansions += 1
        if expansions > MAX_BRACKET_EXPANSIONS:
            raise NoSignChange(f"dJ/dz stays nonnegative down to z={lo}")
    while not upper(hi):
        width = hi - lo
        lo = hi
        hi = hi + width
        expansions += 1
        if expansions > MAX_BRACKET_EXPANSIONS:
            raise NoSignChange(f"dJ/dz stays negative up to z={hi}")
    logger.debug("ref_1d bracket [%s, %s] after %s expansions", lo, hi, expansions)

    iterations = 0
    while hi - lo > settings.bisection_tol * scale and iterations < settings.max_iter:
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        if upper(mid):
            hi = mid
        else:
            lo = mid
        iterations += 1

    z_star = hi
    if family.kinked:
        inside = dist.atoms[(dist.atoms > lo) & (dist.atoms <= hi)]
        for atom in np.sort(inside):
            if upper(float(atom)):
                z_star = float(atom)
                break

    tilt = worst_case_expectation(family, dist, z_star, epsilon)
    result = SolverDiagnostics(
        iterations=iterations,
        derivative_evals=diagnostics["evals"],
        converged=iterations < settings.max_iter,
        degenerate_hit=diagnostics["degenerate"] or tilt.degenerate,
    )
    return _one_d_result(z_star, tilt, baseline, result)


def ref_kd(
    family: ScoreFamily,
    dist: EmpiricalDistribution,
    epsilon: float,
    init: Optional[np.ndarray] = None,
    restarts: int = KD_RESTARTS,
    seed: Optional[int] = None,
) -> REFResult:
    """
    Robust (VaR, ES) pair.

    Minimises J(z1, z2) with the Nelder-Mead simplex method in coordinates scaled by
    the initial ES, from `init` and `restarts` random perturbations of it. One
    worst-case measure is shared by both coordinates.

    ### Args
    - family (ScoreFamily): The joint (VaR, ES) family.
    - dist (EmpiricalDistribution): Baseline measure.
    - epsilon (float): KL tolerance.
    - init (Optional[np.ndarray]): Starting pair; defaults to the empirical (VaR, ES).
    - restarts (int): Number of perturbed restarts.
    - seed (Optional[int]): Seed of the restart perturbations.

    ### Returns
    - REFResult: z_star = (VaR, ES) with `quantile_crossing` set when VaR > ES.

    ### Raises
    - DomainError: If the starting ES is not positive or no run stays in the action domain.
    """
    _check_epsilon(epsilon)
    _require_dim(family, 2)
    settings = get_settings()
    baseline = np.array([
        empirical_functional(FunctionalKind.VAR, dist.atoms, dist.weights, family.alpha),
        empirical_functional(FunctionalKind.ES, dist.atoms, dist.weights, family.alpha),
    ])

    if dist.is_degenerate:
        constant = float(dist.atoms[dist.weights > 0][0])
        pair = np.array([constant, constant])
        tilt = worst_case_expectation(family, dist, pair, epsilon)
        return REFResult(z_star=pair, eta_star=tilt.eta_star, value=tilt.value,
                         baseline_value=baseline, tilted_weights=tilt.tilted_weights)

    start = np.asarray(init, dtype=float) if init is not None else baseline
    check_domain(family, start, dist.atoms)
    scale = max(abs(start[1]), float(np.abs(dist.atoms).max()) * 1e-6, 1e-300)
    counter = {"evals": 0, "degenerate": False}

    def objective(point: np.ndarray) -> float:
        counter["evals"] += 1
        try:
            tilt = worst_case_expectation(family, dist, point * scale, epsilon)
        except DomainError:
            return math.inf
        counter["degenerate"] |= tilt.degenerate
        return tilt.value

    rng = np.random.default_rng(settings.seed if seed is None else seed)
    starts = [start / scale]
    starts += [start / scale * (1.0 + 0.1 * rng.standard_normal(2)) for _ in range(restarts)]
    runs = []
    for x0 in starts:
        run = minimize(
            objective,
            x0,
            method="Nelder-Mead",
            options={
                "xatol": KD_SHRINK_TOL,
                "fatol": 1e-12,
                "maxiter": settings.max_iter,
                "maxfev": settings.max_iter,
            },
        )
        runs.append(run)
    best = min(runs, key=lambda run: run.fun)
    finite = [run.x for run in runs if math.isfinite(run.fun)]
    if not finite:
        raise DomainError(f"every Nelder-Mead run left the action domain at epsilon={epsilon}")
    spread = max(float(np.linalg.norm(x - best.x)) for x in finite)

    z_star = best.x * scale
    tilt = worst_case_expectation(family, dist, z_star, epsilon)
    diagnostics = SolverDiagnostics(
        iterations=int(sum(run.nit for run in runs)),
        derivative_evals=counter["evals"],
        converged=bool(best.success),
        degenerate_hit=counter["degenerate"],
        quantile_crossing=bool(z_star[0] > z_star[1]),
        restart_spread=spread,
    )
    if diagnostics.quantile_crossing:
        logger.info("quantile crossing at epsilon=%s: VaR=%s > ES=%s", epsilon, *z_star)
    return REFResult(z_star=z_star, eta_star=tilt.eta_star, value=tilt.value,
                     baseline_value=baseline, tilted_weights=tilt.tilted_weights,
                     diagnostics=diagnostics)


def robust_regression(
    family: ScoreFamily,
    X,
    y,
    epsilon: float,
    init: Optional[np.ndarray] = None,
) -> RegressionFit:
    """
    Robust regression coefficients.

    Minimises beta -> sup_Q E^Q[S(beta'x, y)] over the KL ball around the empirical
    joint law of (x, y). The descent direction is the tilted gradient preconditioned
    by the inverse baseline Gram matrix; steps follow Armijo backtracking, which also
    rejects steps that leave the action domain.

    ### Args
    - family (ScoreFamily): A one-dimensional scoring family.
    - X: n x m design matrix (include a column of ones for an intercept).
    - y: n responses.
    - epsilon (float): KL tolerance.
    - init (Optional[np.ndarray]): Warm start; defaults to the least-squares fit.

    ### Returns
    - RegressionFit: coefficients with the in-sample MSE under the baseline measure.

    ### Raises
    - ShapeMismatch: If X is not a matrix with n > m >= 1.
    - LengthMismatch: If X and y have different numbers of rows.
    - RankDeficient: If X lacks full column rank.
    """
    _check_epsilon(epsilon)
    _require_dim(family, 1)
    settings = get_settings()
    design = np.asarray(X, dtype=float)
    response = np.asarray(y, dtype=float).ravel()
    if design.ndim != 2:
        raise ShapeMismatch("X must be a two-dimensional matrix")
    n_rows, n_cols = design.shape
    if n_rows != response.size:
        raise LengthMismatch(f"X has {n_rows} rows but y has {response.size} entries")
    if not n_rows > n_cols >= 1:
        raise ShapeMismatch(f"need n > m >= 1, got n={n_rows}, m={n_cols}")
    if np.linalg.matrix_rank(design) < n_cols:
        raise RankDeficient("the design matrix does not have full column rank")

    weights = np.full(n_rows, 1.0 / n_rows)
    gram = design.T @ (weights[:, None] * design)
    precondition = np.linalg.inv(gram)
    if init is not None:
        beta = np.asarray(init, dtype=float)
    else:
        beta = np.linalg.lstsq(design, response, rcond=None)[0]

    def objective(coef: np.ndarray) -> Tuple[float, np.ndarray, TiltSolution]:
        fitted = design @ coef
        tilt = solve_tilt(evaluate(family, fitted, response), weights, epsilon)
        slope = design.T @ (tilt.tilted_weights * grad(family, fitted, response))
        return tilt.value, slope, tilt

    value, gradient, tilt = objective(beta)
    scale = max(1.0, float(np.mean(np.abs(response)) * np.mean(np.linalg.norm(design, axis=1))))
    converged = False
    iterations = 0
    while iterations < settings.max_iter:
        if np.linalg.norm(gradient) <= 1e-8 * scale:
            converged = True
            break
        direction = -precondition @ gradient
        decrease = float(gradient @ direction)
        step = 1.0
        accepted = None
        for _ in range(MAX_BACKTRACKS):
            candidate = beta + step * direction
            try:
                trial = objective(candidate)
            except DomainError:
                step *= 0.5
                continue
            if trial[0] <= value + ARMIJO_C * step * decrease:
                accepted = (candidate, trial)
                break
            step *= 0.5
        iterations += 1
        stalled = accepted is None or value - accepted[1][0] <= STALL_RTOL * abs(value)
        if accepted is not None:
            beta, (value, gradient, tilt) = accepted
        if stalled:
            # no descent along the tilted gradient: a kink or a flat minimum
            converged = bool(family.kinked or np.linalg.norm(gradient) <= 1e-6 * scale)
            break
    else:
        logger.info("robust_regression hit the iteration cap at epsilon=%s", epsilon)

    residual = response - design @ beta
    return RegressionFit(
        beta=beta,
        epsilon=epsilon,
        mse=float(np.dot(weights, residual**2)),
        eta_star=tilt.eta_star,
        value=value,
        iterations=iterations,
        converged=converged,
    )


def _derivative(family: ScoreFamily, dist: EmpiricalDistribution, z: float, epsilon: float):
    _require_dim(family, 1)
    tilt = worst_case_expectation(family, dist, z, epsilon)
    slopes = grad(family, z, dist.atoms)
    magnitude = float(np.dot(dist.weights, np.abs(slopes)))
    return float(np.dot(tilt.tilted_weights, slopes)), magnitude, tilt


def _classical_value(family: ScoreFamily, dist: EmpiricalDistribution) -> np.ndarray:
    if family.kind == ScoreKind.MEAN_PATTON:
        value = empirical_functional(FunctionalKind.MEAN, dist.atoms, dist.weights)
    elif family.kind == ScoreKind.VAR_HOMOGENEOUS:
        value = empirical_functional(FunctionalKind.VAR, dist.atoms, dist.weights, family.level)
    else:
        value = empirical_functional(FunctionalKind.EXPECTILE, dist.atoms, dist.weights, family.level)
    return np.array([value])


def _one_d_result(z_star: float, tilt: TiltSolution, baseline: np.ndarray,
                  diagnostics: SolverDiagnostics) -> REFResult:
    return REFResult(
        z_star=np.array([z_star]),
        eta_star=tilt.eta_star,
        value=tilt.value,
        baseline_value=baseline,
        tilted_weights=tilt.tilted_weights,
        diagnostics=diagnostics,
    )


def _check_epsilon(epsilon: float) -> None:
    if not math.isfinite(epsilon) or epsilon < 0:
        raise BadEpsilon(f"epsilon must be finite and nonnegative, got {epsilon}")


def _require_dim(family: ScoreFamily, dim: int) -> None:
    if family.dim != dim:
        raise ShapeMismatch(f"expected a {dim}-dimensional family, got dim={family.dim}")
