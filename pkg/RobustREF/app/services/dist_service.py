"""
This module generates the seeded samples used by the experiments and computes the
classical functionals of weighted samples.

### Functions:

- `sample(spec, n, seed)`: n x k sample of a marginal or copula specification.
- `marginal_quantile(spec, u)`: Quantile function of a marginal specification.
- `texp_mean(spec)`: Conditional mean of a truncated exponential.
- `pareto_parameters(spec)`: Type-I Pareto shape and scale matching a mean and std.
- `empirical_functional(kind, atoms, weights, level)`: Mean, VaR, ES or expectile.
- `layers_from_quantiles(X, levels)`: Reinsurance layers from empirical marginal quantiles.
- `reinsurance_losses(X, layers)`: Total reinsurer loss per scenario.
- `reinsurance_sample(n, seed)`: Scenario matrix of the three-line reinsurance market.
- `regression_dataset(model, seed)`: Covariate/response pairs of the contamination study.
"""
import math
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy import stats
from scipy.optimize import brentq

from helpers.errors import BadSeedStream, BadSpec, EmptyInput, ShapeMismatch
from models.distribution import (
    BetaSpec,
    FunctionalKind,
    GumbelCopulaSpec,
    LayerSpec,
    LogNormalSpec,
    ParetoMMSpec,
    StudentTCopulaSpec,
    TExpSpec,
)

CUMULATIVE_TOL = 1e-12
MAX_SEED = 2**64 - 1

REINSURANCE_MARGINALS = (
    LogNormalSpec(mu=4.58, sigma=0.19),
    LogNormalSpec(mu=4.98, sigma=0.23),
    ParetoMMSpec(mean=150.0, std=40.0),
)
REINSURANCE_COPULA = StudentTCopulaSpec(
    corr=[[1.0, 0.2, 0.0], [0.2, 1.0, 0.8], [0.0, 0.8, 1.0]], df=4)
REINSURANCE_LEVELS = ((0.6, 0.8), (0.6, 0.8), (0.85, 0.95))
LOSS_SCALE = 0.01

REGRESSION_COPULA = GumbelCopulaSpec(theta=5.0, dim=2)
REFERENCE_POINTS = 40
OUTLIERS_PER_STEP = 4
REGRESSION_MODELS = ("A", "B", "C", "A40", "A80", "A120")


def rng_from_seed(seed: int) -> np.random.Generator:
    """
    Random generator for a seed.

    ### Raises
    - BadSeedStream: If the seed is not an integer in [0, 2**64).
    """
    if isinstance(seed, bool) or not isinstance(seed, (int, np.integer)):
        raise BadSeedStream(f"seed must be an integer, got {seed!r}")
    if not 0 <= int(seed) <= MAX_SEED:
        raise BadSeedStream(f"seed must lie in [0, 2**64), got {seed}")
    return np.random.default_rng(int(seed))


def sample(spec, n: int, seed: int) -> np.ndarray:
    """
    Draw a seeded sample.

    Marginals are sampled by inverse transform of uniforms. The Gumbel copula uses
    the Marshall-Olkin construction with a positive stable mixing variable and the
    t copula maps a multivariate t sample through the univariate t cdf.

    ### Args
    - spec: A `DistributionSpec` or `CopulaSpec`.
    - n (int): Number of rows.
    - seed (int): Seed of the random stream.

    ### Returns
    - np.ndarray: n x 1 for marginals, n x dim uniforms for copulas.

    ### Raises
    - BadSpec: If n is not positive or `spec` is of an unknown type.
    - BadSeedStream: On an invalid seed.
    """
    if n <= 0:
        raise BadSpec(f"sample size must be positive, got {n}")
    rng = rng_from_seed(seed)
    if isinstance(spec, GumbelCopulaSpec):
        return _gumbel_uniforms(spec, n, rng)
    if isinstance(spec, StudentTCopulaSpec):
        return _t_uniforms(spec, n, rng)
    return marginal_quantile(spec, rng.uniform(size=n)).reshape(n, 1)


def marginal_quantile(spec, u) -> np.ndarray:
    """
    Quantile function F^{-1}(u) of a marginal specification.

    For the truncated exponential F^{-1}(u) = G^{-1}(u G(x_bar)) = -log(1 - u trunc_q) / rate.
    """
    u = np.asarray(u, dtype=float)
    if isinstance(spec, TExpSpec):
        return -np.log1p(-u * spec.trunc_q) / spec.rate
    if isinstance(spec, BetaSpec):
        return stats.beta(spec.a, spec.b).ppf(u)
    if isinstance(spec, LogNormalSpec):
        return stats.lognorm(s=spec.sigma, scale=math.exp(spec.mu)).ppf(u)
    if isinstance(spec, ParetoMMSpec):
        shape, scale = pareto_parameters(spec)
        return stats.pareto(b=shape, scale=scale).ppf(u)
    raise BadSpec(f"unknown marginal specification {spec!r}")


def texp_mean(spec: TExpSpec) -> float:
    """
    Mean of the exponential conditioned on lying below its truncation point.
    """
    rate, cut = spec.rate, spec.truncation_point
    tail = math.exp(-rate * cut)
    return ((1.0 - tail) / rate - cut * tail) / spec.trunc_q


def pareto_parameters(spec: ParetoMMSpec) -> Tuple[float, float]:
    """
    Shape and scale of the type-I Pareto distribution with the requested mean and std.

    The squared coefficient of variation of a type-I Pareto with shape a > 2 is
    1 / (a (a - 2)); the shape is its root above 2 and the scale follows from the mean.

    ### Returns
    - Tuple[float, float]: (shape, scale).
    """
    target = (spec.std / spec.mean) ** 2
    shape = brentq(lambda a: 1.0 / (a * (a - 2.0)) - target, 2.0 + 1e-12, 1e6, xtol=1e-14)
    return shape, spec.mean * (shape - 1.0) / shape


def empirical_functional(kind, atoms, weights, level: Optional[float] = None) -> float:
    """
    Classical functional of a weighted sample.

    ### Args
    - kind (FunctionalKind | str): `mean`, `var`, `es` or `expectile`.
    - atoms: Observations.
    - weights: Probabilities of the observations.
    - level (Optional[float]): alpha for VaR / ES, tau for the expectile.

    ### Returns
    - float: the functional. VaR is the lower quantile inf{x : F(x) >= alpha}; ES splits
      the VaR atom so that the tail mass is exactly 1 - alpha.

    ### Raises
    - EmptyInput: If there are no observations.
    - BadSpec: If a level is missing or outside (0, 1).
    """
    atoms = np.asarray(atoms, dtype=float).ravel()
    weights = np.asarray(weights, dtype=float).ravel()
    if atoms.size == 0:
        raise EmptyInput("no observations")
    kind = FunctionalKind(kind)
    if kind == FunctionalKind.MEAN:
        return float(np.dot(weights, atoms))
    if level is None or not 0.0 < level < 1.0:
        raise BadSpec(f"{kind.value} needs a level in (0, 1), got {level}")

    if kind == FunctionalKind.EXPECTILE:
        return _expectile(atoms, weights, level)

    order = np.argsort(atoms, kind="stable")
    sorted_atoms, cumulative = atoms[order], np.cumsum(weights[order])
    index = int(np.searchsorted(cumulative, level - CUMULATIVE_TOL, side="left"))
    index = min(index, atoms.size - 1)
    var = float(sorted_atoms[index])
    if kind == FunctionalKind.VAR:
        return var
    above = sorted_atoms > var
    excess_mass = max(float(cumulative[index]) - level, 0.0)
    tail = float(np.dot(weights[order][above], sorted_atoms[above]))
    return (tail + excess_mass * var) / (1.0 - level)


def layers_from_quantiles(
    X, levels: Sequence[Tuple[float, float]] = REINSURANCE_LEVELS
) -> List[LayerSpec]:
    """
    Deductibles and limits from empirical marginal quantiles of the scenarios.

    ### Args
    - X: n x k scenario matrix.
    - levels: (deductible level, limit level) per column.

    ### Returns
    - List[LayerSpec]: d_k = F_k^{-1}(first level) and l_k = F_k^{-1}(second level).

    ### Raises
    - ShapeMismatch: If the number of columns differs from the number of levels.
    """
    X = _scenario_matrix(X, len(levels))
    uniform = np.full(X.shape[0], 1.0 / X.shape[0])
    return [
        LayerSpec(
            deductible=empirical_functional(FunctionalKind.VAR, X[:, k], uniform, low),
            limit=empirical_functional(FunctionalKind.VAR, X[:, k], uniform, high),
        )
        for k, (low, high) in enumerate(levels)
    ]


def reinsurance_losses(X, layers: Sequence[LayerSpec]) -> np.ndarray:
    """
    Total reinsurer loss Y = sum_k min((X_k - d_k)_+, l_k) per scenario.

    ### Raises
    - ShapeMismatch: If X does not have one column per layer.
    """
    X = _scenario_matrix(X, len(layers))
    deductibles = np.array([layer.deductible for layer in layers])
    limits = np.array([layer.limit for layer in layers])
    return np.minimum(np.maximum(X - deductibles, 0.0), limits).sum(axis=1)


def reinsurance_sample(n: int, seed: int) -> np.ndarray:
    """
    Scenario matrix (X_1, X_2, X_3) of the three insurers: two log-normal lines and a
    Pareto line coupled by a t copula with 4 degrees of freedom.
    """
    uniforms = sample(REINSURANCE_COPULA, n, seed)
    return np.column_stack([
        marginal_quantile(spec, uniforms[:, k]) for k, spec in enumerate(REINSURANCE_MARGINALS)
    ])


def regression_dataset(model: str, seed: int) -> Tuple[np.ndarray, np.ndarray]:
    """
    Covariates and responses of the contamination and sample-size studies.

    Reference points come from a Gumbel(5) copula with uniform marginals. Model A holds
    40 of them; B adds 4 independent uniform outliers and C adds 4 more. A40, A80 and
    A120 are nested prefixes of one reference sample. Reference points and outliers use
    the streams `seed` and `seed + 1`.

    ### Returns
    - Tuple[np.ndarray, np.ndarray]: covariates x and responses y.

    ### Raises
    - BadSpec: For an unknown model name.
    """
    model = model.upper()
    if model not in REGRESSION_MODELS:
        raise BadSpec(f"unknown regression model {model!r}; use one of {REGRESSION_MODELS}")
    reference = sample(REGRESSION_COPULA, 3 * REFERENCE_POINTS, seed)
    if model.startswith("A") and len(model) > 1:
        points = reference[: int(model[1:])]
    else:
        outliers = rng_from_seed(seed + 1).uniform(size=(2 * OUTLIERS_PER_STEP, 2))
        extra = {"A": 0, "B": OUTLIERS_PER_STEP, "C": 2 * OUTLIERS_PER_STEP}[model]
        points = np.vstack([reference[:REFERENCE_POINTS], outliers[:extra]])
    return points[:, 0].copy(), points[:, 1].copy()


def _scenario_matrix(X, columns: int) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[1] != columns:
        raise ShapeMismatch(f"expected an n x {columns} matrix, got shape {X.shape}")
    return X


def _expectile(atoms: np.ndarray, weights: np.ndarray, tau: float) -> float:
    low, high = float(atoms.min()), float(atoms.max())
    if low == high:
        return low

    def identification(e: float) -> float:
        gains = np.dot(weights, np.maximum(atoms - e, 0.0))
        losses = np.dot(weights, np.maximum(e - atoms, 0.0))
        return tau * gains - (1.0 - tau) * losses

    return float(brentq(identification, low, high, xtol=1e-12 * max(abs(low), abs(high)),
                        rtol=4 * np.finfo(float).eps))


def _gumbel_uniforms(spec: GumbelCopulaSpec, n: int, rng: np.random.Generator) -> np.ndarray:
    if spec.theta == 1.0:
        return rng.uniform(size=(n, spec.dim))
    stable_index = 1.0 / spec.theta
    mixing = stats.levy_stable.rvs(
        stable_index, 1.0, loc=0.0, scale=math.cos(math.pi / (2.0 * spec.theta)) ** spec.theta,
        size=n, random_state=rng)
    exponentials = rng.exponential(size=(n, spec.dim))
    return np.exp(-((exponentials / mixing[:, None]) ** stable_index))


def _t_uniforms(spec: StudentTCopulaSpec, n: int, rng: np.random.Generator) -> np.ndarray:
    draws = stats.multivariate_t(shape=np.asarray(spec.corr), df=spec.df).rvs(
        size=n, random_state=rng)
    return stats.t.cdf(np.asarray(draws).reshape(n, spec.dim), df=spec.df)
