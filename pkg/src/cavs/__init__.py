"""Adaptive L_gamma location and regression estimation with constrained variance selection."""

__version__ = "0.1.0"

from .core import (
    DEFAULT_SOLVER,
    INF,
    ConvergenceError,
    Power,
    Sample,
    SolverConfig,
    as_power,
    lgamma_center,
    midrange,
    min_objective_log,
)
from .avar import MomentTable, QuadratureError, VhatValue, moment_abs, v_population, vhat
from .selector import CandidateGrid, CavsConfig, CavsResult, cavs_estimate, parse_grid
from .regress import DesignMatrix, RegressionResult, cavs_regress, lgamma_regress, vhat_regress
from .baselines import EULER_GAMMA, GgMleProfile, boundary_threshold, gg_mle_select, holdout_cv_select, l_n
from .distributions import DistributionSpec, SeededRng, parse_dist, sample

__all__ = [
    "CandidateGrid",
    "CavsConfig",
    "CavsResult",
    "ConvergenceError",
    "DEFAULT_SOLVER",
    "DesignMatrix",
    "DistributionSpec",
    "EULER_GAMMA",
    "GgMleProfile",
    "INF",
    "MomentTable",
    "Power",
    "QuadratureError",
    "RegressionResult",
    "Sample",
    "SeededRng",
    "SolverConfig",
    "VhatValue",
    "as_power",
    "boundary_threshold",
    "cavs_estimate",
    "cavs_regress",
    "gg_mle_select",
    "holdout_cv_select",
    "l_n",
    "lgamma_center",
    "lgamma_regress",
    "midrange",
    "min_objective_log",
    "moment_abs",
    "parse_dist",
    "parse_grid",
    "sample",
    "v_population",
    "vhat",
    "vhat_regress",
]
