"""Stochastic nutrient-phytoplankton-zooplankton chain toolkit.

Simulates the three-component Ito system with multiplicative noise,
computes the two invasion rates that decide which populations persist,
classifies the long-run regime, and checks the asymptotic claims
(extinction rates, moment bounds, convergence of occupation measures)
empirically on simulated ensembles.
"""

__version__ = "0.1.0"

from .config import OutputConfig, RunConfig, load_config
from .diagnostics import (
    convergence_check,
    extinction_rate_check,
    log_slope,
    moment_bound_check,
    negative_moment_check,
)
from .engine import (
    RngStream,
    SimConfig,
    Trajectory,
    run_paths,
    self_convergence_order,
    simulate_boundary2d,
    simulate_full3d,
    simulate_nutrient1d,
    step_hybrid,
)
from .invariant import (
    EmpiricalMeasure,
    InverseGamma,
    ergodic_average,
    invgamma_cdf,
    invgamma_density,
    invgamma_from_params,
    invgamma_sample,
    occupation_histogram,
    quadrature_against_invgamma,
    sup_cdf_gap,
    tv_distance,
)
from .model import (
    DerivedConstants,
    FunctionalResponse,
    ModelParams,
    State,
    ValidationReport,
    beddington_deangelis,
    constant,
    derived_constants,
    holling2,
    validate_params,
)
from .thresholds import (
    COEXISTENCE,
    INCONCLUSIVE,
    PHYTOPLANKTON_ONLY,
    TOTAL_EXTINCTION,
    RegimeMapResult,
    ThresholdEstimate,
    ThresholdReport,
    build_threshold_report,
    classify,
    lambda1,
    lambda1_closed_form,
    lambda1_quadrature,
    lambda2_closed_form_constant,
    lambda2_estimate,
    regime_map,
)

__all__ = [
    "__version__",
    "ModelParams",
    "DerivedConstants",
    "FunctionalResponse",
    "State",
    "ValidationReport",
    "constant",
    "holling2",
    "beddington_deangelis",
    "derived_constants",
    "validate_params",
    "SimConfig",
    "RngStream",
    "Trajectory",
    "step_hybrid",
    "simulate_full3d",
    "simulate_boundary2d",
    "simulate_nutrient1d",
    "run_paths",
    "self_convergence_order",
    "InverseGamma",
    "invgamma_from_params",
    "invgamma_density",
    "invgamma_cdf",
    "invgamma_sample",
    "quadrature_against_invgamma",
    "ergodic_average",
    "EmpiricalMeasure",
    "occupation_histogram",
    "tv_distance",
    "sup_cdf_gap",
    "TOTAL_EXTINCTION",
    "PHYTOPLANKTON_ONLY",
    "COEXISTENCE",
    "INCONCLUSIVE",
    "ThresholdEstimate",
    "ThresholdReport",
    "RegimeMapResult",
    "lambda1",
    "lambda1_closed_form",
    "lambda1_quadrature",
    "lambda2_closed_form_constant",
    "lambda2_estimate",
    "classify",
    "build_threshold_report",
    "regime_map",
    "log_slope",
    "extinction_rate_check",
    "moment_bound_check",
    "negative_moment_check",
    "convergence_check",
    "RunConfig",
    "OutputConfig",
    "load_config",
]
