"""
This module defines the ExperimentService class, which runs the experiment harnesses
behind the command-line subcommands and returns their CSV rows.

Independent cells (replicates, grid points) run in a process pool when more than one
worker is configured; rows are returned in a deterministic order either way. Random
cells use the seed stream `seed + index`.
"""
import logging
from concurrent.futures import ProcessPoolExecutor
from typing import Callable, Dict, Iterable, List, Sequence, Tuple

import numpy as np

from helpers.csv_io import read_losses, read_regression
from helpers.errors import BadSpec
from models.distribution import BetaSpec, EmpiricalDistribution, TExpSpec
from models.experiment import (
    CheckConfig,
    MurphyConfig,
    RefConfig,
    RegressConfig,
    ReinsuranceConfig,
    SweepParameter,
)
from models.score import ActionDomain, ScoreFamily
from services.dist_service import (
    LOSS_SCALE,
    layers_from_quantiles,
    regression_dataset,
    reinsurance_losses,
    reinsurance_sample,
    sample,
)
from services.oracle_service import grid_ref, simplex_worst_case
from services.score_service import evaluate, make_score, score_from_mapping
from services.solver_service import ref_1d, ref_kd, robust_regression
from services.tilt_service import solve_tilt

logger = logging.getLogger(__name__)

Rows = Tuple[List[str], List[Dict]]

CHECK_INSTANCE = (0.0, 1.0, 5.0)
TILT_RTOL = 1e-4


class ExperimentService:
    """
    Runs the `ref`, `murphy`, `reinsurance`, `regress` and `check` harnesses.

    Every method takes a validated option record and returns the output columns and
    the rows keyed by column name.
    """

    @staticmethod
    def ref(config: RefConfig) -> Tuple[List[str], List[Dict], List[str], List[Dict]]:
        """
        Robust functional of a loss sample for every tolerance.

        Losses are multiplied by `config.scale` before solving; predictions are mapped
        back by homogeneity (divided by the scale) and values by scale**b.

        Returns:
            Tuple: result columns and rows, then worst-case weight columns and rows
            (one weight column per tolerance).

        Raises:
            REFError: On invalid data, family or tolerances.
        """
        family = score_from_mapping(config.score_mapping())
        atoms = read_losses(config.input) * config.scale
        dist = EmpiricalDistribution.uniform(atoms)
        joint = family.dim == 2

        rows, weight_rows = [], [{"atom": atom / config.scale} for atom in atoms]
        previous = None
        for eps in config.eps:
            if joint:
                result = ref_kd(family, dist, eps, init=previous, seed=config.seed)
                previous = result.z_star
            else:
                result = ref_1d(family, dist, eps)
            z_star = result.z_star / config.scale
            row = {
                "epsilon": eps,
                "z_star": z_star[0],
                "eta_star": result.eta_star,
                "value": result.value / config.scale**family.b,
                "degenerate_hit": result.diagnostics.degenerate_hit,
            }
            if joint:
                row["z2_star"] = z_star[1]
                row["quantile_crossing"] = result.diagnostics.quantile_crossing
            rows.append(row)
            for record, weight in zip(weight_rows, result.tilted_weights):
                record[f"w_{eps:g}"] = weight

        columns = ["epsilon", "z_star"] + (["z2_star"] if joint else [])
        columns += ["eta_star", "value", "degenerate_hit"]
        columns += ["quantile_crossing"] if joint else []
        weight_columns = ["atom"] + [f"w_{eps:g}" for eps in config.eps]
        return columns, rows, weight_columns, weight_rows

    @staticmethod
    def murphy(config: MurphyConfig) -> Rows:
        """
        Robust functional against the homogeneity degree b, or against a parameter of
        the baseline distribution at fixed b.
        """
        base = config.score_mapping()
        if config.vary == SweepParameter.B:
            atoms = (read_losses(config.input) if config.input is not None
                     else _baseline_sample(config, None))
            cells = [(dict(base, b=b), atoms, tuple(config.eps), None) for b in config.b_grid]
            columns = ["b", "epsilon", "z_star"]
        else:
            cells = [
                (base, _baseline_sample(config, value), tuple(config.eps), value)
                for value in config.param_grid
            ]
            columns = ["b", "param", "epsilon", "z_star"]
        rows = [row for block in _run(_murphy_cell, cells, config.workers) for row in block]
        return columns, rows

    @staticmethod
    def reinsurance(config: ReinsuranceConfig) -> Rows:
        """
        Robust (VaR, ES) of simulated reinsurance losses over replicates.

        Losses are scaled by 0.01 before solving and results rescaled by 100. A replicate
        with VaR > ES at any (alpha, epsilon) is flagged rejected on all its rows.
        """
        families = [make_score("vares", config.b, alpha=alpha) for alpha in config.alphas]
        cells = [
            (index, config.seed + index, config.n, families, tuple(config.eps), config.restarts)
            for index in range(config.replicates)
        ]
        rows = [row for block in _run(_reinsurance_cell, cells, config.workers) for row in block]
        rejected = {row["replicate"] for row in rows if row["rejected"]}
        if rejected:
            logger.info("rejected %s of %s replicates for quantile crossing",
                        len(rejected), config.replicates)
        return ["replicate", "alpha", "epsilon", "var", "es", "rejected"], rows

    @staticmethod
    def regress(config: RegressConfig) -> Rows:
        """
        Robust regression with an intercept on a CSV or on the built-in datasets, one row
        per (dataset, epsilon), fitted with continuation in epsilon.
        """
        family = score_from_mapping(config.score_mapping())
        if config.input is not None:
            covariates, response = read_regression(config.input)
            datasets = [("input", covariates, response)]
        else:
            datasets = []
            for name in config.model:
                x, y = regression_dataset(name, config.seed)
                datasets.append((name, x.reshape(-1, 1), y))

        width = datasets[0][1].shape[1] + 1
        columns = ["model", "epsilon"] + [f"beta_{k}" for k in range(width)]
        columns += ["mse", "eta_star", "converged"]
        rows = []
        for name, covariates, response in datasets:
            design = np.column_stack([np.ones(response.size), covariates])
            beta = None
            for eps in config.eps:
                fit = robust_regression(family, design, response, eps, init=beta)
                beta = fit.beta
                row = {"model": name, "epsilon": eps, "mse": fit.mse,
                       "eta_star": fit.eta_star, "converged": fit.converged}
                row.update({f"beta_{k}": coef for k, coef in enumerate(fit.beta)})
                rows.append(row)
        return columns, rows

    @staticmethod
    def check(config: CheckConfig) -> Rows:
        """
        Cross-check the tilt against the simplex oracle and `ref_1d` against the grid
        oracle, on a CSV sample or on the atoms {0, 1, 5}.

        Raises:
            BadSpec: For the two-dimensional (VaR, ES) family.
        """
        family = score_from_mapping(config.score_mapping())
        if family.dim != 1:
            raise BadSpec("check supports one-dimensional families only")
        atoms = read_losses(config.input) if config.input is not None else np.array(CHECK_INSTANCE)
        dist = EmpiricalDistribution.uniform(atoms)
        z_classical = ref_1d(family, dist, 0.0).z_star[0]
        scores = evaluate(family, z_classical, dist.atoms)
        grid = np.linspace(dist.atoms.min(), dist.atoms.max(), config.grid_points)
        if family.action_domain == ActionDomain.POSITIVE_REALS:
            grid = grid[grid > 0]

        rows = []
        for eps in config.eps:
            if dist.size <= 8:
                tilt = solve_tilt(scores, dist.weights, eps).value
                oracle = simplex_worst_case(scores, dist.weights, eps, seed=config.seed).value
                gap = abs(tilt - oracle)
                rows.append({"check": "tilt", "epsilon": eps, "solver": tilt, "oracle": oracle,
                             "abs_diff": gap, "ok": gap <= TILT_RTOL * max(abs(oracle), 1e-12)})
            else:
                logger.info("skipping the tilt check: %s atoms exceed the oracle limit", dist.size)
            solved = ref_1d(family, dist, eps).z_star[0]
            report = grid_ref(family, dist, eps, grid)
            gap = abs(solved - report.argmin_z)
            rows.append({"check": "ref_1d", "epsilon": eps, "solver": solved,
                         "oracle": report.argmin_z, "abs_diff": gap,
                         "ok": gap <= report.grid_resolution})
        return ["check", "epsilon", "solver", "oracle", "abs_diff", "ok"], rows


def _run(func: Callable, cells: Sequence, workers: int) -> Iterable:
    if workers <= 1 or len(cells) <= 1:
        return [func(cell) for cell in cells]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(func, cells))


def _baseline_sample(config: MurphyConfig, value) -> np.ndarray:
    if config.dist == "texp":
        rate = value if config.vary == SweepParameter.LAMBDA else config.rate
        spec = TExpSpec(rate=rate)
    else:
        shape1 = value if config.vary == SweepParameter.SHAPE1 else config.shape1
        shape2 = value if config.vary == SweepParameter.SHAPE2 else config.shape2
        spec = BetaSpec(a=shape1, b=shape2)
    return sample(spec, config.n, config.seed)[:, 0]


def _murphy_cell(cell) -> List[Dict]:
    mapping, atoms, epsilons, param = cell
    family: ScoreFamily = score_from_mapping(mapping)
    dist = EmpiricalDistribution.uniform(atoms)
    rows = []
    for eps in epsilons:
        row = {"b": family.b, "epsilon": eps, "z_star": ref_1d(family, dist, eps).z_star[0]}
        if param is not None:
            row["param"] = param
        rows.append(row)
    return rows


def _reinsurance_cell(cell) -> List[Dict]:
    index, seed, n, families, epsilons, restarts = cell
    scenarios = reinsurance_sample(n, seed)
    layers = layers_from_quantiles(scenarios)
    losses = reinsurance_losses(scenarios, layers)
    cap = sum(layer.limit for layer in layers)
    logger.debug("replicate %s: max loss %.2f, layer cap %.2f", index, losses.max(), cap)
    dist = EmpiricalDistribution.uniform(losses * LOSS_SCALE)

    rows, crossing = [], False
    for family in families:
        previous = None
        for eps in epsilons:
            result = ref_kd(family, dist, eps, init=previous, restarts=restarts, seed=seed)
            previous = result.z_star
            crossing |= result.diagnostics.quantile_crossing
            var, es = result.z_star / LOSS_SCALE
            rows.append({"replicate": index, "alpha": family.alpha, "epsilon": eps,
                         "var": var, "es": es})
    for row in rows:
        row["rejected"] = crossing
    return rows
