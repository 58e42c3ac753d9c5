"""Estimators, identification formulas and a Monte Carlo harness for
two-construct reflexive path models."""

from ._kernels import NUMBA_ENABLED
from .envelopes import (
    CompositeWeights,
    EnvelopeOptions,
    WeightMethod,
    composite_estimate,
    composite_moments,
    envelope_weights_mle,
    pca_weights,
    select_dimensions,
    serr_estimate,
    simpls_weights,
    unit_weights,
)
from .errors import ConstraintModeError, DataError, NumericalError, PathcorError
from .model import (
    ConstraintMode,
    IdentifiabilityReport,
    JointCov,
    PathParams,
    bias_factor,
    check_identifiability,
    convert_constraints,
    joint_covariance,
    load_path_params,
    path_params_from_dict,
    path_params_to_dict,
    population_reg_variances,
    save_path_params,
    sigma2_from_h,
)
from .moments import (
    Dataset,
    SampleMoments,
    compute_moments,
    moments_from_covariance,
    read_dataset_csv,
    standardized_cross_cov,
)
from .results import FitResult
from .rrr import Rank1Fit, estimate_cor_regression, fit_rank1, population_cor_regression
from .sem import (
    SemFit,
    SemOptions,
    fit_sem,
    implied_cov,
    sem_implied_reg_correlation,
    sem_structured_cov,
)
from .simulate import (
    ErrorStructure,
    SimConfig,
    SimResult,
    generate_dataset,
    load_sim_config,
    reproduce_figure,
    run_grid,
    run_single_estimator,
    simulation_params,
    write_sim_csv,
)

__version__ = "0.1.0"

__all__ = [
    "NUMBA_ENABLED",
    "CompositeWeights",
    "EnvelopeOptions",
    "WeightMethod",
    "composite_estimate",
    "composite_moments",
    "envelope_weights_mle",
    "pca_weights",
    "select_dimensions",
    "serr_estimate",
    "simpls_weights",
    "unit_weights",
    "ConstraintModeError",
    "DataError",
    "NumericalError",
    "PathcorError",
    "ConstraintMode",
    "IdentifiabilityReport",
    "JointCov",
    "PathParams",
    "bias_factor",
    "check_identifiability",
    "convert_constraints",
    "joint_covariance",
    "load_path_params",
    "path_params_from_dict",
    "path_params_to_dict",
    "population_reg_variances",
    "save_path_params",
    "sigma2_from_h",
    "Dataset",
    "SampleMoments",
    "compute_moments",
    "moments_from_covariance",
    "read_dataset_csv",
    "standardized_cross_cov",
    "FitResult",
    "Rank1Fit",
    "estimate_cor_regression",
    "fit_rank1",
    "population_cor_regression",
    "SemFit",
    "SemOptions",
    "fit_sem",
    "implied_cov",
    "sem_implied_reg_correlation",
    "sem_structured_cov",
    "ErrorStructure",
    "SimConfig",
    "SimResult",
    "generate_dataset",
    "load_sim_config",
    "reproduce_figure",
    "run_grid",
    "run_single_estimator",
    "simulation_params",
    "write_sim_csv",
]
