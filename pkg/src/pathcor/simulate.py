"""Seeded Monte Carlo harness comparing the estimators on model data.

Datasets are drawn from the reflexive model under marginal constraints with
a common loading vector on both sides.  Child generators are derived from
(master seed, rho bit pattern, replication index), so permuting the rho grid
permutes result rows without changing any cell, and partial re-runs
reproduce exactly.
"""

import csv
import json
from dataclasses import dataclass, replace
from enum import Enum

import numpy as np

from .envelopes import (
    WeightMethod,
    composite_estimate,
    pca_weights,
    serr_estimate,
    unit_weights,
)
from .errors import DataError
from .linalg import orthonormal_complement, sym_sqrt
from .model import ConstraintMode, PathParams, bias_factor, joint_covariance
from .moments import Dataset, compute_moments
from .results import FitResult
from .rrr import estimate_cor_regression
from .sem import SemOptions, fit_sem, sem_implied_reg_correlation

ESTIMATOR_NAMES = ("rrr", "pls", "serr", "sem", "pca", "unit")

CSV_COLUMNS = (
    "rho",
    "estimator",
    "mean",
    "sd",
    "n_fail",
    "target_marginal",
    "target_regression",
)


class ErrorStructure(Enum):
    """Error-covariance structure used on both indicator blocks."""

    IDENTITY = "identity"
    ENVELOPE_STRUCTURED = "envelope_structured"


@dataclass(frozen=True)
class SimConfig:
    """One Monte Carlo comparison: a correlation grid at fixed loadings.

    ``estimators`` is a subset of rrr, pls, serr, sem, pca, unit; pls and
    serr run with composite dimension 1 on both sides (the true envelope
    dimension under both generating structures).
    """

    loading: tuple
    error_structure: ErrorStructure
    rho_grid: tuple
    n: int
    reps: int
    seed: int
    estimators: tuple = ("rrr", "pls", "serr", "sem")

    def __post_init__(self):
        loading = tuple(float(v) for v in self.loading)
        if not any(v != 0.0 for v in loading):
            raise DataError("loading vector must be nonzero")
        grid = tuple(float(v) for v in self.rho_grid)
        if not grid or any(abs(v) >= 1.0 for v in grid):
            raise DataError("rho grid values must lie in (-1, 1)")
        if self.reps < 1:
            raise DataError("reps must be at least 1")
        names = tuple(str(e) for e in self.estimators)
        unknown = [e for e in names if e not in ESTIMATOR_NAMES]
        if unknown:
            raise DataError(f"unknown estimators: {', '.join(unknown)}")
        object.__setattr__(self, "loading", loading)
        object.__setattr__(self, "rho_grid", grid)
        object.__setattr__(self, "estimators", names)
        object.__setattr__(self, "error_structure", ErrorStructure(self.error_structure))
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "reps", int(self.reps))
        object.__setattr__(self, "seed", int(self.seed))


@dataclass(frozen=True, eq=False)
class SimCell:
    """Aggregate for one (rho, estimator) pair."""

    rho: float
    estimator: str
    mean: float
    sd: float
    n_fail: int
    target_marginal: float
    target_regression: float


@dataclass(frozen=True, eq=False)
class SimResult:
    n: int
    reps: int
    seed: int
    cells: tuple

    def cell(self, rho, estimator) -> SimCell:
        for c in self.cells:
            if c.estimator == estimator and abs(c.rho - rho) < 1e-12:
                return c
        raise KeyError(f"no cell for rho={rho}, estimator={estimator}")


def error_covariance(loading, structure: ErrorStructure) -> np.ndarray:
    """Per-block error covariance: identity, or the structure whose
    complement directions are construct-invariant with triple variance."""
    loading = np.asarray(loading, dtype=float)
    dim = loading.size
    if structure is ErrorStructure.IDENTITY:
        return np.eye(dim)
    unit = loading / np.linalg.norm(loading)
    l0 = orthonormal_complement(unit.reshape(-1, 1))
    return np.outer(unit, unit) + 3.0 * l0 @ l0.T


def simulation_params(loading, structure: ErrorStructure, rho: float) -> PathParams:
    """Marginal-constraint parameters with the common loading on both sides."""
    loading = np.asarray(loading, dtype=float)
    dim = loading.size
    err = error_covariance(loading, structure)
    return PathParams(
        p=dim,
        r=dim,
        mu_x=np.zeros(dim),
        mu_y=np.zeros(dim),
        beta_x_xi=loading,
        beta_y_eta=loading,
        sigma_x_given_xi=err,
        sigma_y_given_eta=err,
        var_xi=1.0,
        var_eta=1.0,
        cov_xi_eta=float(rho),
        constraint_mode=ConstraintMode.MARGINAL,
    )


def generate_dataset(params: PathParams, n: int, seed) -> Dataset:
    """Draw n observations of (X, Y) via the symmetric square root of the
    model covariance; byte-identical across runs for a fixed seed."""
    cov = joint_covariance(params).sigma_xy_block
    root = sym_sqrt(cov)
    rng = np.random.default_rng(seed)
    z = rng.standard_normal((int(n), params.p + params.r))
    mean = np.concatenate([params.mu_x, params.mu_y])
    return Dataset(n=int(n), p=params.p, r=params.r, rows=mean + z @ root)


def _child_seed(master: int, rho: float, rep: int) -> np.random.SeedSequence:
    bits = int(np.array(rho, dtype=np.float64).view(np.uint64)[()])
    return np.random.SeedSequence(master, spawn_key=(bits >> 32, bits & 0xFFFFFFFF, rep))


def run_single_estimator(
    data: Dataset,
    name: str,
    u_x: int = 1,
    u_y: int = 1,
    sem_options: SemOptions = SemOptions(),
) -> FitResult:
    """Run one named estimator on a dataset.

    pls/serr use composite dimension (u_x, u_y); sem reports cor(xi, eta)
    as ``cor_construct`` alongside its implied regression-scale estimate.
    """
    if name == "rrr":
        d1 = estimate_cor_regression(compute_moments(data))
        return FitResult(method="rrr", cor_regression=d1)
    if name == "pls":
        return serr_estimate(data, u_x, u_y, WeightMethod.SIMPLS)
    if name == "serr":
        return serr_estimate(data, u_x, u_y, WeightMethod.ENVELOPE_MLE)
    if name == "sem":
        fit = fit_sem(compute_moments(data), sem_options)
        return FitResult(
            method="sem",
            cor_regression=sem_implied_reg_correlation(fit),
            cor_construct=fit.rho,
            diagnostics={
                "converged": fit.converged,
                "iterations": fit.iterations,
                "grad_norm": fit.grad_norm,
                "heywood": list(fit.heywood),
            },
        )
    if name == "pca":
        m = compute_moments(data)
        weights = pca_weights(m)
        return FitResult(
            method="pca", cor_regression=composite_estimate(m, weights), weights=weights
        )
    if name == "unit":
        m = compute_moments(data)
        weights = unit_weights(data.p, data.r)
        return FitResult(
            method="unit", cor_regression=composite_estimate(m, weights), weights=weights
        )
    raise DataError(f"unknown estimator {name!r}")


def _cell_value(result: FitResult) -> float:
    if result.method == "sem":
        if not result.diagnostics.get("converged", True):
            raise DataError("sem fit did not converge")
        return float(result.cor_construct)
    return float(result.cor_regression)


def run_grid(config: SimConfig) -> SimResult:
    """Run the full (rho grid) x (replications) x (estimators) comparison.

    A failing estimator marks that replication missing for its cell and
    increments the cell's failure count; it never aborts the grid.
    """
    cells = []
    for rho in config.rho_grid:
        params = simulation_params(config.loading, config.error_structure, rho)
        target_m = rho
        target_r = bias_factor(params) * rho
        draws = {name: [] for name in config.estimators}
        fails = {name: 0 for name in config.estimators}
        for rep in range(config.reps):
            data = generate_dataset(params, config.n, _child_seed(config.seed, rho, rep))
            for name in config.estimators:
                try:
                    draws[name].append(_cell_value(run_single_estimator(data, name)))
                except Exception:
                    fails[name] += 1
        for name in config.estimators:
            values = np.asarray(draws[name], dtype=float)
            if values.size == 0:
                mean, sd = float("nan"), float("nan")
            else:
                mean = float(np.mean(values))
                sd = float(np.std(values, ddof=1)) if values.size > 1 else 0.0
            cells.append(
                SimCell(
                    rho=rho,
                    estimator=name,
                    mean=mean,
                    sd=sd,
                    n_fail=fails[name],
                    target_marginal=target_m,
                    target_regression=target_r,
                )
            )
    return SimResult(n=config.n, reps=config.reps, seed=config.seed, cells=tuple(cells))


# Published simulation configurations: loading vector, error structure, and
# the sample sizes shown (one result per sample size).
REPRODUCTION_GRID = tuple(round(0.05 * k, 10) for k in range(1, 14))

FIGURE_CONFIGS = {
    1: ((4.0 / 3.0, 0.98, 0.75), ErrorStructure.IDENTITY, (100, 1000)),
    2: ((0.58, 0.98, 0.0), ErrorStructure.IDENTITY, (100,)),
    3: ((4.0 / 3.0, 0.98, 0.75), ErrorStructure.ENVELOPE_STRUCTURED, (100, 1000)),
    4: ((4.0, 4.0, 4.0), ErrorStructure.IDENTITY, (100,)),
}


def reproduce_figure(figure: int, seed: int, reps: int = 10, estimators=None) -> dict:
    """Run the published configuration for one figure.

    Returns a mapping from panel label ("n100", "n1000") to SimResult.
    Replications default to the published 10; acceptance checks use 30 for
    tighter tolerances.
    """
    if figure not in FIGURE_CONFIGS:
        raise DataError(f"unknown figure id {figure!r}; valid ids are 1, 2, 3, 4")
    loading, structure, sizes = FIGURE_CONFIGS[figure]
    base = SimConfig(
        loading=loading,
        error_structure=structure,
        rho_grid=REPRODUCTION_GRID,
        n=sizes[0],
        reps=reps,
        seed=seed,
        estimators=tuple(estimators) if estimators else ("rrr", "pls", "serr", "sem"),
    )
    return {f"n{n}": run_grid(replace(base, n=n)) for n in sizes}


def write_sim_csv(result: SimResult, path):
    """Comma-delimited cells with a header row, 12 significant digits."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_COLUMNS)
        for c in result.cells:
            writer.writerow(
                [
                    f"{c.rho:.12g}",
                    c.estimator,
                    f"{c.mean:.12g}",
                    f"{c.sd:.12g}",
                    c.n_fail,
                    f"{c.target_marginal:.12g}",
                    f"{c.target_regression:.12g}",
                ]
            )


def load_sim_config(path, seed=None, reps=None) -> SimConfig:
    """SimConfig from a JSON document; optional overrides for seed/reps."""
    with open(path, "r", encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise DataError(f"invalid JSON in {path}: {exc}") from None
    if not isinstance(doc, dict):
        raise DataError(f"simulation config in {path} must be a JSON object")
    required = ("loading", "error_structure", "rho_grid", "n")
    missing = [f for f in required if f not in doc]
    if missing:
        raise DataError(f"simulation config missing fields: {', '.join(missing)}")
    if seed is None and "seed" not in doc:
        raise DataError("simulation config needs a seed (field or --seed flag)")
    try:
        structure = ErrorStructure(str(doc["error_structure"]).lower())
    except ValueError:
        raise DataError(
            'error_structure must be "identity" or "envelope_structured"'
        ) from None
    return SimConfig(
        loading=tuple(doc["loading"]),
        error_structure=structure,
        rho_grid=tuple(doc["rho_grid"]),
        n=int(doc["n"]),
        reps=int(reps if reps is not None else doc.get("reps", 10)),
        seed=int(seed if seed is not None else doc["seed"]),
        estimators=tuple(doc.get("estimators", ("rrr", "pls", "serr", "sem"))),
    )
