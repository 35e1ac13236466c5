"""
This module provides brute-force verifiers for the tilt and solver services.

They do not use the exponential-tilting representation: the inner problem is solved by
projected gradient ascent over the probability simplex intersected with the KL ball,
the outer problem by exhaustive grid search.

### Functions:

- `project_kl_ball(point, weights, epsilon)`: Euclidean projection onto the feasible set.
- `simplex_worst_case(score_values, weights, epsilon)`: Inner worst case by projected ascent.
- `grid_ref(family, dist, epsilon, z_grid)`: Outer minimiser by grid search.
- `brute_expectile(atoms, weights, tau)`: Expectile by plain bisection.
"""
import logging
import time

import numpy as np
from scipy.optimize import brentq
from scipy.special import wrightomega

from helpers.errors import BadEpsilon, EmptyInput, GridTooCoarse, LengthMismatch, TooManyAtoms
from models.distribution import EmpiricalDistribution
from models.results import OracleReport
from models.score import ScoreFamily
from services.tilt_service import worst_case_expectation
from settings import get_settings

logger = logging.getLogger(__name__)

MAX_ORACLE_ATOMS = 8
MIN_GRID_POINTS = 100
ORACLE_STARTS = 50
ASCENT_STEP = 1e3
ASCENT_ITERATIONS = 500


def project_simplex(point) -> np.ndarray:
    """
    Euclidean projection onto the probability simplex (sort-based).
    """
    point = np.asarray(point, dtype=float)
    ordered = np.sort(point)[::-1]
    partial = np.cumsum(ordered) - 1.0
    ranks = np.arange(1, point.size + 1)
    rho = np.count_nonzero(ordered - partial / ranks > 0)
    return np.maximum(point - partial[rho - 1] / rho, 0.0)


def kl_divergence(probs, weights) -> float:
    """
    KL divergence sum q_i log(q_i / w_i) with 0 log 0 = 0.
    """
    probs = np.asarray(probs, dtype=float)
    mask = probs > 0
    return float(np.sum(probs[mask] * np.log(probs[mask] / np.asarray(weights)[mask])))


def project_kl_ball(point, weights, epsilon: float) -> np.ndarray:
    """
    Euclidean projection of `point` onto {q in simplex : KL(q || w) <= epsilon}.

    When the plain simplex projection is infeasible the stationarity condition
    q_i + mu log(q_i / w_i) = p_i - nu gives q_i = mu * omega((p_i - nu) / mu + log w_i - log mu)
    with the Wright omega function; the temperature mu is found by bisection on
    KL(q(mu) || w) = epsilon and nu normalises q for each mu. All weights must be positive.
    """
    point = np.asarray(point, dtype=float)
    weights = np.asarray(weights, dtype=float)
    candidate = project_simplex(point)
    if kl_divergence(candidate, weights) <= epsilon:
        return candidate

    def tempered(log_mu: float) -> np.ndarray:
        mu = np.exp(log_mu)
        base = point / mu + np.log(weights) - log_mu
        top = base.max()
        low = top - (1.0 / mu - log_mu)
        high = top - (1.0 / (point.size * mu) - np.log(point.size * mu))

        def excess(theta: float) -> float:
            return mu * float(np.sum(np.real(wrightomega(base - theta)))) - 1.0

        theta = brentq(excess, low, high, xtol=1e-15, rtol=4 * np.finfo(float).eps)
        probs = mu * np.real(wrightomega(base - theta))
        return probs / probs.sum()

    low, high = -40.0, 0.0
    while kl_divergence(tempered(high), weights) > epsilon:
        low, high = high, high + 10.0
    for _ in range(200):
        mid = 0.5 * (low + high)
        if kl_divergence(tempered(mid), weights) > epsilon:
            low = mid
        else:
            high = mid
        if high - low < 1e-13:
            break
    return tempered(high)


def simplex_worst_case(
    score_values, weights, epsilon: float, starts: int = ORACLE_STARTS, seed=None
) -> OracleReport:
    """
    Maximise sum q_i s_i over probability vectors within KL distance epsilon of w.

    Projected gradient ascent from the baseline weights and `starts` random interior
    points (Dirichlet draws pulled into the ball).

    ### Args
    - score_values: Scores s_i (at most 8).
    - weights: Baseline probabilities w_i.
    - epsilon (float): KL tolerance.
    - starts (int): Number of random starting points.
    - seed: Seed of the starting points, defaults to the settings seed.

    ### Returns
    - OracleReport: best value and its maximising probability vector.

    ### Raises
    - TooManyAtoms: For more than 8 atoms.
    - EmptyInput, LengthMismatch: On malformed inputs.
    - BadEpsilon: For a negative epsilon.
    """
    began = time.perf_counter()
    scores = np.asarray(score_values, dtype=float).ravel()
    probs = np.asarray(weights, dtype=float).ravel()
    if scores.size == 0:
        raise EmptyInput("no score values")
    if scores.size != probs.size:
        raise LengthMismatch(f"{scores.size} scores but {probs.size} weights")
    if scores.size > MAX_ORACLE_ATOMS:
        raise TooManyAtoms(f"the oracle handles at most {MAX_ORACLE_ATOMS} atoms, got {scores.size}")
    if epsilon < 0:
        raise BadEpsilon(f"epsilon must be nonnegative, got {epsilon}")

    support = probs > 0
    best = probs.copy()
    if epsilon > 0 and np.ptp(scores[support]) > 0:
        direction = (scores[support] - scores[support].min()) / np.ptp(scores[support])
        rng = np.random.default_rng(get_settings().seed if seed is None else seed)
        initial = [probs[support]] + [
            project_kl_ball(0.5 * (draw + probs[support]), probs[support], epsilon)
            for draw in rng.dirichlet(np.ones(support.sum()), size=starts)
        ]
        best_value = -np.inf
        for start in initial:
            current = _ascend(start, direction, probs[support], epsilon)
            value = float(np.dot(current, scores[support]))
            if value > best_value:
                best_value, best[support] = value, current

    return OracleReport(
        value=float(np.dot(best, scores)),
        argmax_weights=best,
        grid_resolution=0.0,
        runtime_ms=int(1000 * (time.perf_counter() - began)),
    )


def grid_ref(family: ScoreFamily, dist: EmpiricalDistribution, epsilon: float, z_grid) -> OracleReport:
    """
    Minimise the worst-case expected score over a grid of predictions.

    ### Returns
    - OracleReport: grid argmin, its value and the grid step.

    ### Raises
    - GridTooCoarse: For fewer than 100 grid points.
    - DomainError: If a grid point lies outside the action domain.
    """
    began = time.perf_counter()
    grid = np.sort(np.asarray(z_grid, dtype=float).ravel())
    if grid.size < MIN_GRID_POINTS:
        raise GridTooCoarse(f"need at least {MIN_GRID_POINTS} grid points, got {grid.size}")
    values = np.array([worst_case_expectation(family, dist, z, epsilon).value for z in grid])
    best = int(np.argmin(values))
    return OracleReport(
        value=float(values[best]),
        argmin_z=float(grid[best]),
        grid_resolution=float(np.max(np.diff(grid))),
        runtime_ms=int(1000 * (time.perf_counter() - began)),
    )


def brute_expectile(atoms, weights, tau: float) -> float:
    """
    tau-expectile by bisection on tau E[(Y - e)_+] - (1 - tau) E[(Y - e)_-] to 1e-12.

    ### Raises
    - EmptyInput: If there are no atoms.
    """
    atoms = np.asarray(atoms, dtype=float).ravel()
    weights = np.asarray(weights, dtype=float).ravel()
    if atoms.size == 0:
        raise EmptyInput("no observations")
    low, high = float(atoms.min()), float(atoms.max())
    tolerance = 1e-12 * max(abs(low), abs(high), 1e-300)
    while high - low > tolerance:
        mid = 0.5 * (low + high)
        if mid in (low, high):
            break
        gains = np.dot(weights, np.maximum(atoms - mid, 0.0))
        losses = np.dot(weights, np.maximum(mid - atoms, 0.0))
        if tau * gains - (1.0 - tau) * losses > 0:
            low = mid
        else:
            high = mid
    return 0.5 * (low + high)


def _ascend(start, direction, weights, epsilon: float) -> np.ndarray:
    current = start
    for _ in range(ASCENT_ITERATIONS):
        following = project_kl_ball(current + ASCENT_STEP * direction, weights, epsilon)
        if np.max(np.abs(following - current)) < 1e-14:
            return following
        current = following
    logger.debug("projected ascent stopped at the iteration cap")
    return current
