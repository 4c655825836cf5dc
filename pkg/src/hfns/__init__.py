"""Pseudo-spectral solver for the horizontally filtered Navier-Stokes model
on the periodic box, with checks of its energy identity and a priori bounds."""

from .estimates import (
    BoundReport,
    Constants,
    check_decay_bound,
    check_dissipation_bound,
    check_energy_identity,
    check_h2_bound,
    compute_constants,
)
from .fields import random_solenoidal, single_mode, taylor_green
from .model import Forcing, SimParams, nonlinear_term, rhs, simulate, step
from .pathspace import (
    PathMetricConfig,
    absorbing_check,
    hausdorff_semidistance,
    path_metric,
    time_shift,
    window_distance,
)
from .pressure import continuity_modulus, momentum_residual, recover_pressure
from .spectral import (
    Grid,
    NormReport,
    SpectralScalarField,
    SpectralVectorField,
    apply_horizontal_filter,
    apply_horizontal_filter_inverse,
    lambda_h_power,
    leray_project,
    make_grid,
    norms,
)
from .trajectory import Trajectory

__version__ = "0.1.0"

__all__ = [
    "BoundReport",
    "Constants",
    "Forcing",
    "Grid",
    "NormReport",
    "PathMetricConfig",
    "SimParams",
    "SpectralScalarField",
    "SpectralVectorField",
    "Trajectory",
    "absorbing_check",
    "apply_horizontal_filter",
    "apply_horizontal_filter_inverse",
    "check_decay_bound",
    "check_dissipation_bound",
    "check_energy_identity",
    "check_h2_bound",
    "compute_constants",
    "continuity_modulus",
    "hausdorff_semidistance",
    "lambda_h_power",
    "leray_project",
    "make_grid",
    "momentum_residual",
    "nonlinear_term",
    "norms",
    "path_metric",
    "random_solenoidal",
    "recover_pressure",
    "rhs",
    "simulate",
    "single_mode",
    "step",
    "taylor_green",
    "time_shift",
    "window_distance",
]
