"""Nonlinear stability toolkit for monostable reaction-diffusion fronts.

The package computes travelling-front profiles, checks the spectral
assumptions behind front stability in exponentially weighted spaces,
builds Evans-function bundles and resolvent kernels, evaluates the
linearized semigroup by contour integration, and runs the nonlinear
evolution with transported-weight decay diagnostics.
"""
from __future__ import annotations

from .model import (
    CheckReport,
    PolyMap,
    SystemModel,
    builtin_models,
    check_equilibria,
    evaluate_rhs,
    get_model,
    load_model,
    save_model,
)
from .profile import (
    WaveProfile,
    asymptotic_fit,
    default_profile,
    load_profile,
    profile_residual,
    save_profile,
    solve_profile,
)
from .spectrum import (
    LambdaRegion,
    MarginalData,
    SpatialEigenData,
    check_essential_assumptions,
    classify_marginal_modes,
    dispersion,
    essential_curves,
    nu_expansion,
    projection,
    rate_calibration,
    spatial_eigenvalues,
)
from .weights import OmegaWeight, SubExpWeight, build_omega, staircase_weight, standard_weights
from .evans import (
    BasisBundle,
    DualBasis,
    EvansValue,
    FirstOrderSystem,
    circle_contour,
    coefficient_matrices,
    dual_bases,
    evans,
    evans_at_origin,
    evans_scan,
    first_order_system,
    integrate_bases,
    jordan_scan,
    load_evans_scan,
    s_matrix,
    save_evans_scan,
    sector_ball_contour,
    winding_number,
)

__version__ = "0.1.0"

__all__ = [
    "CheckReport",
    "PolyMap",
    "SystemModel",
    "builtin_models",
    "check_equilibria",
    "evaluate_rhs",
    "get_model",
    "load_model",
    "save_model",
    "WaveProfile",
    "asymptotic_fit",
    "default_profile",
    "load_profile",
    "profile_residual",
    "save_profile",
    "solve_profile",
    "LambdaRegion",
    "MarginalData",
    "SpatialEigenData",
    "check_essential_assumptions",
    "classify_marginal_modes",
    "dispersion",
    "essential_curves",
    "nu_expansion",
    "projection",
    "rate_calibration",
    "spatial_eigenvalues",
    "OmegaWeight",
    "SubExpWeight",
    "build_omega",
    "staircase_weight",
    "standard_weights",
    "BasisBundle",
    "DualBasis",
    "EvansValue",
    "FirstOrderSystem",
    "circle_contour",
    "coefficient_matrices",
    "dual_bases",
    "evans",
    "evans_at_origin",
    "evans_scan",
    "first_order_system",
    "integrate_bases",
    "jordan_scan",
    "load_evans_scan",
    "s_matrix",
    "save_evans_scan",
    "sector_ball_contour",
    "winding_number",
    "__version__",
]
