import math

import numpy as np
import pytest

from helpers.errors import BadEpsilon, GridTooCoarse, TooManyAtoms
from models.distribution import EmpiricalDistribution, TExpSpec
from services.dist_service import sample
from services.oracle_service import (
    brute_expectile,
    grid_ref,
    kl_divergence,
    project_kl_ball,
    project_simplex,
    simplex_worst_case,
)
from services.score_service import make_score
from services.solver_service import ref_1d
from services.tilt_service import solve_tilt

SQUARED = make_score("mean", 2)


def test_project_simplex():
    np.testing.assert_allclose(project_simplex([0.2, 0.3, 0.5]), [0.2, 0.3, 0.5])
    np.testing.assert_allclose(project_simplex([2.0, 0.0]), [1.0, 0.0])
    np.testing.assert_allclose(project_simplex([0.5, 0.5, -3.0]), [0.5, 0.5, 0.0])


@pytest.mark.parametrize("eps", [0.01, 0.1, 0.5])
def test_projection_onto_ball_is_feasible(eps, rng):
    weights = rng.dirichlet(np.ones(5))
    for _ in range(10):
        projected = project_kl_ball(rng.normal(size=5), weights, eps)
        assert projected.sum() == pytest.approx(1.0, abs=1e-12)
        assert np.all(projected >= 0)
        assert kl_divergence(projected, weights) <= eps + 1e-10


def test_projection_keeps_interior_points():
    weights = np.array([0.2, 0.3, 0.5])
    inside = np.array([0.21, 0.29, 0.5])
    np.testing.assert_allclose(project_kl_ball(inside, weights, 0.1), inside)


def test_zero_tolerance_returns_baseline():
    report = simplex_worst_case([0.0, 2.0, 5.0], [0.2, 0.5, 0.3], 0.0)
    assert report.value == pytest.approx(2.5)
    np.testing.assert_array_equal(report.argmax_weights, [0.2, 0.5, 0.3])


def test_large_tolerance_reaches_maximum():
    report = simplex_worst_case([0.0, 1.0, 2.0], np.full(3, 1 / 3), 1.2, starts=5)
    assert report.value == pytest.approx(2.0, abs=1e-9)


def test_two_point_matches_tilt():
    scores, weights = [0.0, 1.0], [0.5, 0.5]
    report = simplex_worst_case(scores, weights, 0.1, starts=5, seed=1)
    assert report.value == pytest.approx(solve_tilt(scores, weights, 0.1).value, rel=1e-4)
    assert report.grid_resolution == 0.0


def test_oracle_value_between_mean_and_max(rng):
    scores = rng.uniform(size=6)
    weights = rng.dirichlet(np.ones(6))
    report = simplex_worst_case(scores, weights, 0.2, starts=3, seed=2)
    assert float(np.dot(weights, scores)) - 1e-12 <= report.value <= scores.max() + 1e-12
    assert kl_divergence(report.argmax_weights, weights) <= 0.2 + 1e-8


def test_oracle_input_checks():
    with pytest.raises(TooManyAtoms):
        simplex_worst_case(np.arange(9.0), np.full(9, 1 / 9), 0.1)
    with pytest.raises(BadEpsilon):
        simplex_worst_case([0.0, 1.0], [0.5, 0.5], -0.1)


def test_grid_ref_examples():
    dist = EmpiricalDistribution.uniform([1.0, 2.0, 3.0])
    report = grid_ref(SQUARED, dist, 0.0, np.linspace(0.0, 4.0, 401))
    assert report.argmin_z == pytest.approx(2.0, abs=1e-12)
    assert report.value == pytest.approx(1 / 3)
    assert report.grid_resolution == pytest.approx(0.01)

    skewed = EmpiricalDistribution.uniform([0.0, 1.0, 5.0])
    minimax = grid_ref(SQUARED, skewed, math.log(3), np.linspace(0.0, 5.0, 501))
    assert minimax.argmin_z == pytest.approx(2.5, abs=1e-12)
    assert minimax.value == pytest.approx(3.125)


def test_grid_ref_rejects_coarse_grid():
    dist = EmpiricalDistribution.uniform([1.0, 2.0, 3.0])
    with pytest.raises(GridTooCoarse):
        grid_ref(SQUARED, dist, 0.1, np.linspace(0.0, 4.0, 50))


def test_grid_ref_against_quantile_solver():
    atoms = sample(TExpSpec(rate=2.0), 5_000, seed=21)[:, 0]
    dist = EmpiricalDistribution.uniform(atoms)
    family = make_score("var", 1.0, alpha=0.95)
    result = ref_1d(family, dist, 0.1)
    report = grid_ref(family, dist, 0.1, np.linspace(atoms.min(), atoms.max(), 1000))
    assert result.value <= report.value + 1e-9
    assert report.value <= result.value + report.grid_resolution


def test_brute_expectile():
    atoms, weights = np.array([1.0, 2.0, 3.0]), np.full(3, 1 / 3)
    assert brute_expectile(atoms, weights, 0.7) == pytest.approx(30 / 13, abs=1e-10)
    assert brute_expectile(atoms, weights, 0.5) == pytest.approx(2.0, abs=1e-10)
    assert brute_expectile([3.5, 3.5], [0.5, 0.5], 0.2) == 3.5


@pytest.mark.slow
def test_tilt_agrees_with_oracle_on_random_instances(rng):
    for _ in range(50):
        size = rng.integers(2, 9)
        scores = rng.uniform(size=size)
        weights = rng.dirichlet(np.ones(size))
        for eps in (0.01, 0.05, 0.1, 0.3):
            solution = solve_tilt(scores, weights, eps)
            report = simplex_worst_case(scores, weights, eps, starts=3, seed=0)
            assert solution.value == pytest.approx(report.value, rel=1e-4)
            if not solution.degenerate:
                assert abs(solution.kl_achieved - eps) <= 1e-8
