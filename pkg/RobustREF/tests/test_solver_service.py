import math

import numpy as np
import pytest

from helpers.errors import BadEpsilon, DomainError, RankDeficient, ShapeMismatch
from models.distribution import EmpiricalDistribution, FunctionalKind, LogNormalSpec, TExpSpec
from services.dist_service import empirical_functional, regression_dataset, sample
from services.oracle_service import brute_expectile, grid_ref
from services.score_service import evaluate, grad, make_score
from services.solver_service import j_derivative, ref_1d, ref_kd, robust_regression
from services.tilt_service import solve_tilt, worst_case_expectation

SQUARED = make_score("mean", 2)
SMALL = EmpiricalDistribution.uniform([1.0, 2.0, 3.0])
SKEWED = EmpiricalDistribution.uniform([0.0, 1.0, 5.0])


@pytest.fixture(scope="module")
def texp_losses():
    return sample(TExpSpec(rate=2.0), 10_000, seed=7)[:, 0]


@pytest.fixture(scope="module")
def lognormal_losses():
    return sample(LogNormalSpec(mu=0.0, sigma=0.5), 300, seed=11)[:, 0]


def test_derivative_at_baseline():
    assert j_derivative(SQUARED, SMALL, 2.0, 0.0) == pytest.approx(0.0, abs=1e-15)
    assert j_derivative(SQUARED, SMALL, 3.0, 0.0) == pytest.approx(1.0)


@pytest.mark.parametrize("z,eps", [(2.3, 0.1), (1.4, 0.3), (2.9, 0.05)])
def test_derivative_matches_finite_difference(z, eps):
    step = 1e-5
    upper = worst_case_expectation(SQUARED, SMALL, z + step, eps).value
    lower = worst_case_expectation(SQUARED, SMALL, z - step, eps).value
    assert j_derivative(SQUARED, SMALL, z, eps) == pytest.approx((upper - lower) / (2 * step), rel=1e-4)


def test_derivative_matches_finite_difference_at_random_points(rng):
    family = make_score("mean", 1.5)
    dist = EmpiricalDistribution.uniform(rng.uniform(0.5, 4.0, size=8))
    step = 1e-5
    for _ in range(100):
        z = rng.uniform(1.0, 3.5)
        eps = rng.uniform(0.01, 0.5)
        upper = worst_case_expectation(family, dist, z + step, eps).value
        lower = worst_case_expectation(family, dist, z - step, eps).value
        numeric = (upper - lower) / (2 * step)
        assert j_derivative(family, dist, z, eps) == pytest.approx(numeric, rel=1e-4, abs=1e-9)


def test_ref_1d_mean_of_small_sample():
    result = ref_1d(SQUARED, SMALL, 0.0)
    assert result.z_star[0] == pytest.approx(2.0, abs=1e-9)
    assert result.dim == 1
    np.testing.assert_allclose(result.baseline_value, [2.0])


def test_ref_1d_minimax_midrange():
    result = ref_1d(SQUARED, SKEWED, 1.2)
    assert result.z_star[0] == pytest.approx(2.5, abs=1e-8)
    assert result.diagnostics.degenerate_hit


def test_ref_1d_matches_grid_oracle():
    result = ref_1d(SQUARED, SKEWED, 0.2)
    assert 2.0 < result.z_star[0] < 2.5
    report = grid_ref(SQUARED, SKEWED, 0.2, np.linspace(0.0, 5.0, 5001))
    assert abs(report.argmin_z - result.z_star[0]) <= 1e-3 + 1e-12
    assert report.value >= result.value - 1e-8


@pytest.mark.parametrize("b", [0.0, 1.0, 1.5, 2.0])
def test_baseline_recovers_sample_mean(b, texp_losses):
    dist = EmpiricalDistribution.uniform(texp_losses)
    result = ref_1d(make_score("mean", b), dist, 0.0)
    assert result.z_star[0] == pytest.approx(texp_losses.mean(), rel=1e-6)


def test_baseline_recovers_empirical_quantile(texp_losses):
    dist = EmpiricalDistribution.uniform(texp_losses)
    result = ref_1d(make_score("var", 1, alpha=0.95), dist, 0.0)
    expected = empirical_functional(FunctionalKind.VAR, dist.atoms, dist.weights, 0.95)
    assert result.z_star[0] == expected


def test_baseline_recovers_expectile(texp_losses):
    dist = EmpiricalDistribution.uniform(texp_losses)
    result = ref_1d(make_score("expectile", 2, tau=0.7), dist, 0.0)
    expected = brute_expectile(dist.atoms, dist.weights, 0.7)
    assert result.z_star[0] == pytest.approx(expected, rel=1e-6)


@pytest.mark.parametrize("family", [
    make_score("mean", 1.5),
    make_score("var", 1.0, alpha=0.9),
    make_score("expectile", 2.0, tau=0.7),
])
@pytest.mark.parametrize("c", [0.01, 10.0])
def test_positive_homogeneity(family, c):
    atoms = sample(TExpSpec(rate=2.0), 200, seed=3)[:, 0]
    dist = EmpiricalDistribution.uniform(atoms)
    plain = ref_1d(family, dist, 0.1).z_star[0]
    scaled = ref_1d(family, dist.scaled(c), 0.1).z_star[0]
    assert scaled == pytest.approx(c * plain, rel=1e-6)


@pytest.mark.parametrize("c", [-1.0, 3.0])
def test_translation_invariance(c):
    atoms = sample(TExpSpec(rate=2.0), 200, seed=5)[:, 0]
    dist = EmpiricalDistribution.uniform(atoms)
    plain = ref_1d(SQUARED, dist, 0.1).z_star[0]
    moved = ref_1d(SQUARED, dist.shifted(c), 0.1).z_star[0]
    assert moved == pytest.approx(plain + c, abs=1e-6)


@pytest.mark.parametrize("family", [
    make_score("mean", 1.5),
    make_score("var", 0.5, alpha=0.9),
    make_score("expectile", 1.0, tau=0.3),
])
def test_constant_sample_returns_constant(family):
    dist = EmpiricalDistribution.uniform([2.5] * 5)
    assert ref_1d(family, dist, 0.3).z_star[0] == 2.5


def test_value_nondecreasing_in_tolerance(texp_losses):
    dist = EmpiricalDistribution.uniform(texp_losses[:500])
    family = make_score("mean", 1.5)
    values = [ref_1d(family, dist, eps).value for eps in (0.0, 0.05, 0.1, 0.3)]
    assert np.all(np.diff(values) >= -1e-10)


@pytest.mark.parametrize("eps", [0.0, 0.1, 0.3])
def test_single_crossing(eps):
    grid = np.linspace(0.0, 5.0, 1000)
    signs = np.sign([j_derivative(SQUARED, SKEWED, z, eps) for z in grid])
    signs = signs[signs != 0]
    assert np.count_nonzero(np.diff(signs)) == 1
    result = ref_1d(SQUARED, SKEWED, eps)
    report = grid_ref(SQUARED, SKEWED, eps, np.linspace(0.0, 5.0, 5001))
    assert abs(report.argmin_z - result.z_star[0]) <= 1e-3 + 1e-12


def test_minimiser_beats_perturbations(rng):
    result = ref_1d(SQUARED, SKEWED, 0.2)
    best = result.value
    for delta in rng.uniform(-0.5, 0.5, size=50):
        assert best <= worst_case_expectation(SQUARED, SKEWED, result.z_star[0] + delta, 0.2).value + 1e-6


def test_ref_1d_rejects_joint_family():
    with pytest.raises(ShapeMismatch):
        ref_1d(make_score("vares", 0.5, alpha=0.9), SMALL, 0.1)
    with pytest.raises(BadEpsilon):
        ref_1d(SQUARED, SMALL, -1.0)


def test_ref_kd_recovers_empirical_pair():
    atoms = sample(LogNormalSpec(mu=0.0, sigma=0.5), 10_000, seed=13)[:, 0]
    dist = EmpiricalDistribution.uniform(atoms)
    family = make_score("vares", 0.5, alpha=0.9)
    result = ref_kd(family, dist, 0.0, restarts=2)
    var = empirical_functional(FunctionalKind.VAR, atoms, dist.weights, 0.9)
    es = empirical_functional(FunctionalKind.ES, atoms, dist.weights, 0.9)
    assert result.z_star[0] == pytest.approx(var, rel=1e-3)
    assert result.z_star[1] == pytest.approx(es, rel=1e-3)
    assert not result.diagnostics.quantile_crossing


def test_ref_kd_constant_sample():
    dist = EmpiricalDistribution.uniform([3.0] * 4)
    result = ref_kd(make_score("vares", -0.5, alpha=0.9), dist, 0.5)
    np.testing.assert_array_equal(result.z_star, [3.0, 3.0])


def test_ref_kd_value_nested(lognormal_losses):
    dist = EmpiricalDistribution.uniform(lognormal_losses)
    family = make_score("vares", 0.5, alpha=0.9)
    low = ref_kd(family, dist, 0.6, restarts=2, seed=1)
    high = ref_kd(family, dist, 0.9, init=low.z_star, restarts=2, seed=1)
    assert high.value >= low.value - 1e-8 * abs(low.value)
    assert high.diagnostics.restart_spread is not None


@pytest.mark.parametrize("c", [0.01, 10.0])
def test_ref_kd_homogeneity(c, lognormal_losses):
    family = make_score("vares", 0.5, alpha=0.9)
    plain = ref_kd(family, EmpiricalDistribution.uniform(lognormal_losses), 0.3, restarts=2, seed=4)
    scaled = ref_kd(family, EmpiricalDistribution.uniform(c * lognormal_losses), 0.3,
                    restarts=2, seed=4)
    np.testing.assert_allclose(scaled.z_star, c * plain.z_star, rtol=1e-4)


def test_ref_kd_rejects_scalar_family():
    with pytest.raises(ShapeMismatch):
        ref_kd(SQUARED, SMALL, 0.1)


def test_ref_kd_nonpositive_shortfall_is_a_domain_error():
    family = make_score("vares", 0.5, alpha=0.9)
    losses = EmpiricalDistribution.uniform(-np.arange(1.0, 21.0))
    with pytest.raises(DomainError):
        ref_kd(family, losses, 0.3)
    with pytest.raises(DomainError):
        ref_kd(family, EmpiricalDistribution.uniform([1.0, 2.0, 3.0]), 0.3,
               init=np.array([2.0, -1.0]))


def _design(x):
    return np.column_stack([np.ones(len(x)), x])


def test_regression_baseline_is_least_squares(rng):
    x = rng.uniform(size=60)
    y = 0.3 + 0.8 * x + rng.normal(scale=0.2, size=60)
    design = _design(x)
    fit = robust_regression(SQUARED, design, y, 0.0)
    expected = np.linalg.solve(design.T @ design, design.T @ y)
    np.testing.assert_allclose(fit.beta, expected, atol=1e-8)
    assert fit.converged
    assert fit.mse == pytest.approx(float(np.mean((y - design @ expected) ** 2)))


@pytest.mark.parametrize("eps", [0.0, 1.0, 5.0])
def test_regression_exact_line(eps):
    x = np.linspace(0.1, 1.0, 10)
    fit = robust_regression(SQUARED, _design(x), 2.0 * x, eps)
    np.testing.assert_allclose(fit.beta, [0.0, 2.0], atol=1e-8)
    assert fit.mse == pytest.approx(0.0, abs=1e-16)


def test_regression_gradient_matches_finite_difference(rng):
    x = rng.uniform(size=30)
    y = 0.2 + x + rng.normal(scale=0.3, size=30)
    design = _design(x)
    weights = np.full(30, 1 / 30)

    def value(beta):
        return solve_tilt(evaluate(SQUARED, design @ beta, y), weights, 0.5).value

    for _ in range(100):
        beta = rng.normal(size=2)
        tilt = solve_tilt(evaluate(SQUARED, design @ beta, y), weights, 0.5)
        analytic = design.T @ (tilt.tilted_weights * grad(SQUARED, design @ beta, y))
        for axis in range(2):
            shift = np.zeros(2)
            shift[axis] = 1e-5
            numeric = (value(beta + shift) - value(beta - shift)) / 2e-5
            assert analytic[axis] == pytest.approx(numeric, rel=1e-4, abs=1e-9)


def test_robust_fit_has_larger_baseline_mse(rng):
    x = rng.uniform(size=50)
    y = x + rng.standard_t(df=3, size=50) * 0.2
    design = _design(x)
    classical = robust_regression(SQUARED, design, y, 0.0)
    robust = robust_regression(SQUARED, design, y, 1.0, init=classical.beta)
    assert robust.converged
    assert robust.mse >= classical.mse
    assert robust.value >= classical.value


def test_quantile_regression_runs(rng):
    x = rng.uniform(1.0, 2.0, size=80)
    y = 1.0 + x + rng.exponential(size=80)
    family = make_score("var", 1.0, alpha=0.5)
    design = _design(x)
    start = np.linalg.lstsq(design, y, rcond=None)[0]
    initial = solve_tilt(evaluate(family, design @ start, y), np.full(80, 1 / 80), 0.2).value
    fit = robust_regression(family, design, y, 0.2)
    assert np.all(np.isfinite(fit.beta))
    assert fit.value <= initial


def test_regression_input_checks():
    with pytest.raises(RankDeficient):
        robust_regression(SQUARED, np.ones((5, 2)), np.arange(5.0), 0.0)
    with pytest.raises(ShapeMismatch):
        robust_regression(SQUARED, np.ones((2, 2)), np.arange(2.0), 0.0)


@pytest.mark.slow
def test_contamination_trend_over_seeds():
    slopes = {name: [] for name in ("A", "B", "C")}
    for seed in range(20):
        for name in slopes:
            x, y = regression_dataset(name, seed)
            slopes[name].append(robust_regression(SQUARED, _design(x), y, 0.0).beta[1])
    means = {name: np.mean(values) for name, values in slopes.items()}
    assert means["A"] > means["B"] > means["C"]


@pytest.mark.slow
def test_robust_slope_below_classical_slope():
    classical, robust = [], []
    for seed in range(10):
        x, y = regression_dataset("A", seed)
        fit = robust_regression(SQUARED, _design(x), y, 0.0)
        classical.append(fit.beta[1])
        robust.append(robust_regression(SQUARED, _design(x), y, 1.0, init=fit.beta).beta[1])
    assert np.mean(robust) < np.mean(classical)
