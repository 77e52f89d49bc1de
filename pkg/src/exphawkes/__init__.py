"""Exponential-kernel self-exciting point processes.

Simulation by thinning, exact maximum-likelihood estimation, average
intensity analytics, information-criterion order selection, and a
reproducible Monte-Carlo experiment harness.
"""

__version__ = "0.1.0"

from .core import (
    EventSequence,
    HawkesModel,
    KernelTerm,
    NonStationaryModelError,
    branching_ratio,
    compensator,
    compensator_at_events,
    conditional_intensity,
    time_change_residuals,
)
from .harness import (
    ExperimentConfig,
    ExperimentReport,
    empirical_average_count,
    load_config,
    run_experiment,
    write_report,
)
from .inference import (
    FitOptions,
    FitResult,
    InsufficientDataError,
    fit,
    log_likelihood,
    log_likelihood_direct,
    log_likelihood_gradient,
    relative_rmse,
    rmse,
)
from .mean_intensity import (
    MeanIntensityCurve,
    PartialFractionExpansion,
    RootMultiplicityError,
    default_grid,
    expected_count,
    mean_intensity_curve,
    mean_intensity_general,
    mean_intensity_p1,
    mean_intensity_p2,
    partial_fraction_expansion,
    stationary_mean_intensity,
    volterra_mean_intensity,
)
from .selection import (
    SelectionResult,
    aic,
    aicc,
    bic,
    choose_order,
    criterion_value,
    hq,
    select_order,
)
from .simulate import (
    GENERATOR_ID,
    SimulationRunawayError,
    mix_seed,
    simulate_count,
    simulate_horizon,
)

__all__ = [
    "EventSequence",
    "HawkesModel",
    "KernelTerm",
    "NonStationaryModelError",
    "branching_ratio",
    "compensator",
    "compensator_at_events",
    "conditional_intensity",
    "time_change_residuals",
    "ExperimentConfig",
    "ExperimentReport",
    "empirical_average_count",
    "load_config",
    "run_experiment",
    "write_report",
    "FitOptions",
    "FitResult",
    "InsufficientDataError",
    "fit",
    "log_likelihood",
    "log_likelihood_direct",
    "log_likelihood_gradient",
    "relative_rmse",
    "rmse",
    "MeanIntensityCurve",
    "PartialFractionExpansion",
    "RootMultiplicityError",
    "default_grid",
    "expected_count",
    "mean_intensity_curve",
    "mean_intensity_general",
    "mean_intensity_p1",
    "mean_intensity_p2",
    "partial_fraction_expansion",
    "stationary_mean_intensity",
    "volterra_mean_intensity",
    "SelectionResult",
    "aic",
    "aicc",
    "bic",
    "choose_order",
    "criterion_value",
    "hq",
    "select_order",
    "GENERATOR_ID",
    "SimulationRunawayError",
    "mix_seed",
    "simulate_count",
    "simulate_horizon",
    "__version__",
]
