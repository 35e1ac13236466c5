"""
This module solves the inner worst-case problem over the KL ball.

For a fixed prediction the worst-case measure is the exponential tilt of the baseline
weights, dQ/dP proportional to exp(eta * s_i), with eta chosen so that the KL divergence
d(eta) = eta K'(eta) - K(eta) equals the tolerance. When the tolerance reaches
log(1 / pi_hat) the worst case puts all mass on the maximal-score atoms instead.

### Functions:

- `cgf_and_prime(score_values, weights, eta)`: K(eta) and K'(eta).
- `kl_at(score_values, weights, eta)`: d(eta).
- `solve_tilt(score_values, weights, epsilon)`: Worst-case measure and value.
- `worst_case_expectation(family, dist, z, epsilon)`: J(z) for a scoring family.
"""
import logging
import math
from typing import Optional, Tuple

import numpy as np
from scipy.optimize import brentq
from scipy.special import logsumexp

from helpers.errors import BadEpsilon, EmptyInput, LengthMismatch, NonConvergence, NonFinite
from models.distribution import EmpiricalDistribution
from models.results import TiltSolution
from models.score import ScoreFamily
from services.score_service import evaluate
from settings import get_settings

logger = logging.getLogger(__name__)

ARGMAX_RTOL = 1e-12
MAX_BRACKET_DOUBLINGS = 2000


def cgf_and_prime(score_values, weights, eta: float) -> Tuple[float, float]:
    """
    Cumulant generating function of the score and its derivative.

    ### Args
    - score_values: Scores s_i at a fixed prediction.
    - weights: Baseline probabilities w_i.
    - eta (float): Tilt parameter.

    ### Returns
    - Tuple[float, float]: K(eta) = log sum w_i exp(eta s_i) and the tilted mean K'(eta).

    ### Raises
    - EmptyInput, LengthMismatch: On malformed inputs.
    """
    scores, probs = _as_pair(score_values, weights)
    shift = scores.max()
    log_norm, tilted = _tilt(scores - shift, probs, eta)
    return log_norm + eta * shift, float(np.dot(tilted, scores))


def kl_at(score_values, weights, eta: float) -> float:
    """
    KL divergence d(eta) = eta K'(eta) - K(eta) of the eta-tilted measure from the baseline.
    """
    scores, probs = _as_pair(score_values, weights)
    return _divergence(scores - scores.max(), probs, eta)


def solve_tilt(
    score_values, weights, epsilon: float, tol: Optional[float] = None
) -> TiltSolution:
    """
    Find the worst-case measure over the KL ball of radius `epsilon`.

    ### Args
    - score_values: Scores s_i at a fixed prediction.
    - weights: Baseline probabilities w_i.
    - epsilon (float): KL tolerance.
    - tol (Optional[float]): Accuracy of d(eta*) = epsilon; defaults to the settings.

    ### Returns
    - TiltSolution: the tilt parameter, worst-case weights and worst-case expected score.
      In the degenerate regime eta_star is +inf and the weights are the baseline
      conditioned on the maximal-score atoms.

    ### Raises
    - BadEpsilon: If epsilon is negative or not finite.
    - NonFinite: If a score is not finite.
    - NonConvergence: If no bracket for eta* could be found.
    """
    if not math.isfinite(epsilon) or epsilon < 0:
        raise BadEpsilon(f"epsilon must be finite and nonnegative, got {epsilon}")
    scores, probs = _as_pair(score_values, weights)
    if not np.all(np.isfinite(scores)):
        raise NonFinite("score values overflowed")
    tol = tol if tol is not None else get_settings().tilt_tol

    baseline = float(np.dot(probs, scores))
    if epsilon == 0:
        return TiltSolution(eta_star=0.0, tilted_weights=probs, kl_achieved=0.0,
                            value=baseline, pi_hat=1.0)

    support = probs > 0
    s_max = scores[support].max()
    spread = s_max - scores[support].min()
    on_max = support & (scores >= s_max - ARGMAX_RTOL * max(abs(s_max), spread))
    if np.array_equal(on_max, support):
        # constant scores: every measure in the ball has the same expectation
        return TiltSolution(eta_star=0.0, tilted_weights=probs, kl_achieved=0.0,
                            value=float(s_max), pi_hat=1.0)
    pi_hat = float(probs[on_max].sum())
    threshold = math.log(1.0 / pi_hat)

    if epsilon >= threshold:
        logger.debug("degenerate tilt: epsilon=%s >= log(1/pi_hat)=%s", epsilon, threshold)
        tilted = np.where(on_max, probs, 0.0) / pi_hat
        return TiltSolution(eta_star=math.inf, tilted_weights=tilted,
                            kl_achieved=max(threshold, 0.0), value=float(s_max), pi_hat=min(pi_hat, 1.0),
                            degenerate=True)

    centred = scores - s_max
    eta_hi = 1.0 / spread
    doublings = 0
    while _divergence(centred, probs, eta_hi) <= epsilon:
        eta_hi *= 2.0
        doublings += 1
        if doublings > MAX_BRACKET_DOUBLINGS:
            raise NonConvergence(f"no tilt bracket found for epsilon={epsilon}")

    eta_star, report = brentq(
        lambda eta: _divergence(centred, probs, eta) - epsilon,
        0.0,
        eta_hi,
        xtol=1e-300,
        rtol=4 * np.finfo(float).eps,
        maxiter=get_settings().max_iter,
        full_output=True,
    )
    _, tilted = _tilt(centred, probs, eta_star)
    kl = _divergence(centred, probs, eta_star)
    if abs(kl - epsilon) > tol:
        logger.debug("tilt root within machine precision but |d - eps|=%g", abs(kl - epsilon))
    return TiltSolution(
        eta_star=float(eta_star),
        tilted_weights=tilted,
        kl_achieved=max(kl, 0.0),
        value=float(np.dot(tilted, scores)),
        pi_hat=pi_hat,
        iterations=report.function_calls + doublings,
    )


def worst_case_expectation(
    family: ScoreFamily, dist: EmpiricalDistribution, z, epsilon: float
) -> TiltSolution:
    """
    Worst-case expected score J(z) of a prediction under the KL ball around `dist`.

    ### Raises
    - DomainError: If z or an atom lies outside the family's action domain.
    """
    return solve_tilt(evaluate(family, z, dist.atoms), dist.weights, epsilon)


def _as_pair(score_values, weights):
    scores = np.asarray(score_values, dtype=float).ravel()
    probs = np.asarray(weights, dtype=float).ravel()
    if scores.size == 0:
        raise EmptyInput("no score values")
    if scores.size != probs.size:
        raise LengthMismatch(f"{scores.size} scores but {probs.size} weights")
    return scores, probs


def _tilt(centred, probs, eta: float):
    # centred <= 0 keeps every exponent nonpositive
    exponents = eta * centred
    log_norm = float(logsumexp(exponents, b=probs))
    tilted = probs * np.exp(exponents - log_norm)
    return log_norm, tilted / tilted.sum()


def _divergence(centred, probs, eta: float) -> float:
    log_norm, tilted = _tilt(centred, probs, eta)
    return float(eta * np.dot(tilted, centred) - log_norm)
