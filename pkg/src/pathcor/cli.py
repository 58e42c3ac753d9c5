"""Command-line interface.

Subcommands: ``fit`` (estimators on a CSV dataset, JSON to stdout),
``population`` (closed-form quantities from a params JSON), ``simulate``
(Monte Carlo grid from a config JSON, CSV out) and ``reproduce`` (published
figure configurations, CSV out).

Exit codes: 0 success, 1 usage error, 2 data/numerical error, 3 estimator
non-convergence.  Sample covariances use divisor n (the maximum-likelihood
convention).
"""

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .envelopes import WeightMethod, select_dimensions
from .errors import PathcorError
from .model import (
    ConstraintMode,
    bias_factor,
    check_identifiability,
    convert_constraints,
    joint_covariance,
    load_path_params,
)
from .moments import read_dataset_csv
from .rrr import population_cor_regression
from .sem import SemOptions
from .simulate import (
    ESTIMATOR_NAMES,
    load_sim_config,
    reproduce_figure,
    run_grid,
    run_single_estimator,
    write_sim_csv,
)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_NO_CONVERGENCE = 3


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


def _build_parser():
    parser = _Parser(prog="pathcor", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    fit = sub.add_parser("fit", help="run one estimator on a CSV dataset")
    fit.add_argument("data", help="headerless CSV, X columns first")
    fit.add_argument("--p", type=int, required=True, help="number of X columns")
    fit.add_argument("--r", type=int, required=True, help="number of Y columns")
    fit.add_argument("--method", required=True, choices=list(ESTIMATOR_NAMES))
    fit.add_argument("--ux", type=int, default=1, help="composite dimension, X side")
    fit.add_argument("--uy", type=int, default=1, help="composite dimension, Y side")
    fit.add_argument(
        "--select-dims",
        action="store_true",
        help="choose composite dimensions by BIC (pls/serr only)",
    )
    fit.add_argument("--seed", type=int, default=0, help="SEM multi-start seed")
    fit.add_argument("--sem-max-iter", type=int, default=500)
    fit.add_argument("--sem-tol", type=float, default=1e-7)
    fit.add_argument("--sem-starts", type=int, default=5)

    pop = sub.add_parser("population", help="closed-form population quantities")
    pop.add_argument("params", help="PathParams JSON document")

    sim = sub.add_parser("simulate", help="run a Monte Carlo grid from a config")
    sim.add_argument("--config", required=True, help="SimConfig JSON document")
    sim.add_argument("--out", required=True, help="output CSV path")
    sim.add_argument("--seed", type=int, required=True)
    sim.add_argument("--reps", type=int, default=None)

    rep = sub.add_parser("reproduce", help="run a published figure configuration")
    rep.add_argument("--figure", type=int, required=True, choices=(1, 2, 3, 4))
    rep.add_argument("--out", required=True, help="output CSV path (panel suffix added)")
    rep.add_argument("--seed", type=int, required=True)
    rep.add_argument("--reps", type=int, default=10)

    return parser


def _cmd_fit(args) -> int:
    data = read_dataset_csv(args.data, args.p, args.r)
    u_x, u_y = args.ux, args.uy
    if args.select_dims and args.method in ("pls", "serr"):
        method = WeightMethod.SIMPLS if args.method == "pls" else WeightMethod.ENVELOPE_MLE
        u_x, u_y = select_dimensions(data, method)
    opts = SemOptions(
        max_iter=args.sem_max_iter,
        grad_tol=args.sem_tol,
        n_starts=args.sem_starts,
        seed=args.seed,
    )
    result = run_single_estimator(data, args.method, u_x=u_x, u_y=u_y, sem_options=opts)

    doc = {
        "method": result.method,
        "n": data.n,
        "p": data.p,
        "r": data.r,
        "estimate_cor_regression": result.cor_regression,
        "diagnostics": result.diagnostics,
    }
    if result.method == "sem":
        doc["rho"] = result.cor_construct
        doc["implied_reg_correlation"] = result.cor_regression
    if result.weights is not None:
        doc["u_x"] = result.weights.u_x
        doc["u_y"] = result.weights.u_y
        doc["weights_phi"] = np.asarray(result.weights.phi).tolist()
        doc["weights_gamma"] = np.asarray(result.weights.gamma).tolist()
    print(json.dumps(doc, indent=2))
    if not result.diagnostics.get("converged", True):
        return EXIT_NO_CONVERGENCE
    return EXIT_OK


def _cmd_population(args) -> int:
    params = load_path_params(args.params)
    marginal = convert_constraints(params, ConstraintMode.MARGINAL)
    cov = joint_covariance(marginal)
    factor = bias_factor(marginal)
    bx = marginal.beta_x_xi
    by = marginal.beta_y_eta
    h_x = float(bx @ np.linalg.solve(marginal.sigma_x_given_xi, bx))
    h_y = float(by @ np.linalg.solve(marginal.sigma_y_given_eta, by))

    def declared_zeros(mat):
        dim = mat.shape[0]
        return [(i, j) for i in range(dim) for j in range(dim) if i != j and mat[i, j] == 0.0]

    report = check_identifiability(
        marginal,
        zeros_x=declared_zeros(marginal.sigma_x_given_xi),
        zeros_y=declared_zeros(marginal.sigma_y_given_eta),
    )
    doc = {
        "constraint_mode": params.constraint_mode.value,
        "cor_xi_eta": marginal.cor_xi_eta,
        "cor_regression": population_cor_regression(cov),
        "bias_factor": factor,
        "h_x": h_x,
        "h_y": h_y,
        "identifiability": {
            "x_identified": report.x_identified,
            "y_identified": report.y_identified,
            "cor_identified": report.cor_identified,
            "declared_zeros": "inferred from exact zeros in the error covariances",
        },
    }
    print(json.dumps(doc, indent=2))
    return EXIT_OK


def _panel_path(base: Path, label: str, multi: bool) -> Path:
    if not multi:
        return base
    return base.with_name(f"{base.stem}_{label}{base.suffix or '.csv'}")


def _write_panels(panels: dict, out: str) -> int:
    base = Path(out)
    multi = len(panels) > 1
    for label, result in panels.items():
        path = _panel_path(base, label, multi)
        write_sim_csv(result, path)
        by_est = {}
        for cell in result.cells:
            by_est.setdefault(cell.estimator, []).append(cell)
        for name, cells in by_est.items():
            err = np.nanmean(
                [
                    abs(
                        c.mean
                        - (c.target_marginal if name == "sem" else c.target_regression)
                    )
                    for c in cells
                ]
            )
            fails = sum(c.n_fail for c in cells)
            print(f"{label} {name}: mean |error| {err:.4f}, failures {fails} -> {path}")
    return EXIT_OK


def _cmd_simulate(args) -> int:
    config = load_sim_config(args.config, seed=args.seed, reps=args.reps)
    result = run_grid(config)
    return _write_panels({f"n{config.n}": result}, args.out)


def _cmd_reproduce(args) -> int:
    panels = reproduce_figure(args.figure, seed=args.seed, reps=args.reps)
    return _write_panels(panels, args.out)


_COMMANDS = {
    "fit": _cmd_fit,
    "population": _cmd_population,
    "simulate": _cmd_simulate,
    "reproduce": _cmd_reproduce,
}


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        return _COMMANDS[args.command](args)
    except PathcorError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
