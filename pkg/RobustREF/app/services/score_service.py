"""
This module evaluates the b-homogeneous scoring functions and their z-derivatives.

All evaluations are vectorised over the observations: `z` may be a scalar (or a
2-vector for the (VaR, ES) pair) shared by every observation, or an array that
broadcasts against `y` (one prediction per observation, as in regression).

### Functions:

- `make_score(kind, b, ...)`: Builds a validated `ScoreFamily`.
- `score_from_mapping(values)`: Builds a family from flat key/value pairs.
- `evaluate(family, z, y)`: Score values S(z, y).
- `grad(family, z, y)`: Derivatives dS/dz (right derivative at kinks).
- `check_domain(family, z, y)`: Raises `DomainError` outside the action domain.
"""
from typing import Any, Mapping, Optional

import numpy as np

from helpers.errors import DomainError
from models.score import ActionDomain, ScoreConstants, ScoreFamily, ScoreKind

SCORE_KEYS = ("kind", "b", "alpha", "tau", "d", "d1", "d2", "c0", "c1")


def make_score(
    kind,
    b: float,
    alpha: Optional[float] = None,
    tau: Optional[float] = None,
    **constants: float,
) -> ScoreFamily:
    """
    Build a validated scoring-function family.

    ### Args
    - kind (ScoreKind | str): `mean`, `var`, `expectile` or `vares`.
    - b (float): Homogeneity degree.
    - alpha (Optional[float]): VaR / ES level.
    - tau (Optional[float]): Expectile level.
    - constants: Any of d, d1, d2, c0, c1.

    ### Returns
    - ScoreFamily: the validated family.

    ### Raises
    - RangeError, UnsupportedDegree, BadConstant: see `ScoreFamily`.
    """
    return ScoreFamily(
        kind=ScoreKind(kind),
        b=float(b),
        alpha=alpha,
        tau=tau,
        constants=ScoreConstants(**constants),
    )


def score_from_mapping(values: Mapping[str, Any]) -> ScoreFamily:
    """
    Build a family from a flat mapping such as a config-file section.

    Keys outside kind, b, alpha, tau, d, d1, d2, c0, c1 are ignored; `score` is accepted
    as an alias of `kind`.
    """
    values = {key.lower(): value for key, value in values.items() if value not in (None, "")}
    if "kind" not in values and "score" in values:
        values["kind"] = values["score"]
    values = {key: value for key, value in values.items() if key in SCORE_KEYS}
    constants = {
        key: float(values[key]) for key in ("d", "d1", "d2", "c0", "c1") if key in values
    }
    return make_score(
        values.get("kind"),
        float(values.get("b", 1.0)),
        alpha=float(values["alpha"]) if "alpha" in values else None,
        tau=float(values["tau"]) if "tau" in values else None,
        **constants,
    )


def check_domain(family: ScoreFamily, z, y) -> None:
    """
    Verify that predictions and observations lie inside the action domain.

    ### Raises
    - DomainError: If a required positivity constraint fails or a value is not finite.
    """
    z = np.asarray(z, dtype=float)
    y = np.asarray(y, dtype=float)
    if not (np.all(np.isfinite(z)) and np.all(np.isfinite(y))):
        raise DomainError("predictions and observations must be finite")
    if family.action_domain != ActionDomain.POSITIVE_REALS:
        return
    if family.kind == ScoreKind.VAR_ES_JOINT:
        if np.any(z[..., 1] <= 0):
            raise DomainError("the ES prediction must be strictly positive")
        return
    if np.any(z <= 0) or np.any(y <= 0):
        raise DomainError(
            f"{family.kind.value} score with b={family.b} requires z > 0 and y > 0")


def evaluate(family: ScoreFamily, z, y) -> np.ndarray:
    """
    Evaluate S(z, y).

    ### Args
    - family (ScoreFamily): The scoring function.
    - z: Prediction, broadcastable against `y` (last axis of length 2 for the pair).
    - y: Observations.

    ### Returns
    - np.ndarray: score values, one per observation.

    ### Raises
    - DomainError: If (z, y) lies outside the action domain.
    """
    z, y = _prepare(family, z, y)
    if family.kind == ScoreKind.MEAN_PATTON:
        return _patton(family.b, z, y)
    if family.kind == ScoreKind.EXPECTILE:
        return _expectile_weight(family.tau, z, y) * _patton(family.b, z, y)
    if family.kind == ScoreKind.VAR_HOMOGENEOUS:
        g_z, g_y = _g(family, z), _g(family, y)
        return (_below(y, z) - family.alpha) * (g_z - g_y)
    return _var_es(family, z[..., 0], z[..., 1], y)


def grad(family: ScoreFamily, z, y) -> np.ndarray:
    """
    Evaluate dS/dz.

    At the kink y = z of the indicator-based scores the right derivative is returned
    (the indicator 1{y <= z} equals 1 at y = z).

    ### Returns
    - np.ndarray: derivatives, shape of the broadcast observations for dim 1 and with
      a trailing axis of length 2 for the (VaR, ES) pair.

    ### Raises
    - DomainError: If (z, y) lies outside the action domain.
    """
    z, y = _prepare(family, z, y)
    if family.kind == ScoreKind.MEAN_PATTON:
        return _patton_grad(family.b, z, y)
    if family.kind == ScoreKind.EXPECTILE:
        return _expectile_weight(family.tau, z, y) * _patton_grad(family.b, z, y)
    if family.kind == ScoreKind.VAR_HOMOGENEOUS:
        return (_below(y, z) - family.alpha) * _g_prime(family, z)
    return _var_es_grad(family, z[..., 0], z[..., 1], y)


def _prepare(family: ScoreFamily, z, y):
    z = np.asarray(z, dtype=float)
    y = np.asarray(y, dtype=float)
    if family.kind == ScoreKind.VAR_ES_JOINT:
        if z.shape[-1:] != (2,):
            raise DomainError("the (VaR, ES) score needs a prediction pair")
        z = np.broadcast_to(z, y.shape + (2,)) if z.ndim == 1 else z
    check_domain(family, z, y)
    return z, y


def _below(y, z) -> np.ndarray:
    return (y <= z).astype(float)


def _patton(b: float, z, y) -> np.ndarray:
    if b == 2:
        return 0.5 * (y - z) ** 2
    if b == 0:
        ratio = y / z
        return ratio - np.log(ratio) - 1.0
    if b == 1:
        return y * np.log(y / z) - (y - z)
    return (y**b - z**b) / (b * (b - 1.0)) - z ** (b - 1.0) * (y - z) / (b - 1.0)


def _patton_grad(b: float, z, y) -> np.ndarray:
    if b == 2:
        return z - y
    return z ** (b - 2.0) * (z - y)


def _expectile_weight(tau: float, z, y) -> np.ndarray:
    return np.abs(_below(y, z) - tau)


def _g(family: ScoreFamily, x) -> np.ndarray:
    b, const = family.b, family.constants
    if b > 0:
        magnitude = np.abs(x) ** b
        return np.where(x > 0, const.d1 * magnitude, 0.0) - np.where(
            x < 0, const.d2 * magnitude, 0.0)
    if b == 0:
        return const.d * np.log(x)
    return -const.d * x**b


def _g_prime(family: ScoreFamily, x) -> np.ndarray:
    b, const = family.b, family.constants
    if b > 0:
        with np.errstate(divide="ignore"):
            slope = b * np.abs(x) ** (b - 1.0)
        return np.where(x >= 0, const.d1, const.d2) * slope
    if b == 0:
        return const.d / x
    return -const.d * b * x ** (b - 1.0)


def _g1(family: ScoreFamily, x) -> np.ndarray:
    const = family.constants
    if family.b < 0:
        return np.full_like(x, -const.c0, dtype=float)
    magnitude = np.abs(x) ** family.b
    return np.where(x >= 0, const.d1, -const.d2) * magnitude - const.c0


def _g1_prime(family: ScoreFamily, x) -> np.ndarray:
    const = family.constants
    if family.b < 0:
        return np.zeros_like(x, dtype=float)
    with np.errstate(divide="ignore"):
        slope = family.b * np.abs(x) ** (family.b - 1.0)
    return np.where(x >= 0, const.d1, const.d2) * slope


def _es_primitive(family: ScoreFamily, x):
    """Concave, increasing primitive of G2 (case b in (0, 1) or b < 0)."""
    const = family.constants
    sign = 1.0 if family.b > 0 else -1.0
    return sign * const.c1 * x**family.b + const.c0


def _es_slope(family: ScoreFamily, x):
    sign = 1.0 if family.b > 0 else -1.0
    return sign * family.constants.c1 * family.b * x ** (family.b - 1.0)


def _es_curvature(family: ScoreFamily, x):
    # strictly negative on x > 0 in both degree ranges
    sign = 1.0 if family.b > 0 else -1.0
    b = family.b
    return sign * family.constants.c1 * b * (b - 1.0) * x ** (b - 2.0)


def _var_es(family: ScoreFamily, z1, z2, y) -> np.ndarray:
    alpha = family.alpha
    exceed = (y > z1).astype(float)
    g1_z1 = _g1(family, z1)
    g2_z2 = _es_slope(family, z2)
    tail = exceed * (-g1_z1 + _g1(family, y) - g2_z2 * (z1 - y))
    return tail + (1.0 - alpha) * (g1_z1 + g2_z2 * (z1 - z2) + _es_primitive(family, z2))


def _var_es_grad(family: ScoreFamily, z1, z2, y) -> np.ndarray:
    alpha = family.alpha
    exceed = (y > z1).astype(float)
    level_gap = (1.0 - alpha) - exceed
    d_z1 = level_gap * (_g1_prime(family, z1) + _es_slope(family, z2))
    d_z2 = _es_curvature(family, z2) * ((1.0 - alpha) * (z1 - z2) - exceed * (z1 - y))
    return np.stack(np.broadcast_arrays(d_z1, d_z2), axis=-1)
