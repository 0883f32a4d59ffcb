"""Spectral optimal control of a clamped nonhomogeneous bar."""

from ._chatterbar import (
    CoefficientProfile,
    ControlSchedule,
    Error,
    ModalState,
    OptimizationResult,
    Scenario,
    SpectralBasis,
    certify_spectrum,
    check_force_decay,
    default_horizon,
    discrete_adjoint,
    eigenvalue_asymptote,
    evaluate_schedule,
    integrate_extremal,
    integrate_schedule,
    interval_cost,
    load_scenario,
    modal_state,
    optimize_family,
    parse_scenario,
    propagate_interval,
    run_command,
    solve_eigenpairs,
)

__all__ = [
    "CoefficientProfile",
    "ControlSchedule",
    "Error",
    "ModalState",
    "OptimizationResult",
    "Scenario",
    "SpectralBasis",
    "certify_spectrum",
    "check_force_decay",
    "default_horizon",
    "discrete_adjoint",
    "eigenvalue_asymptote",
    "evaluate_schedule",
    "integrate_extremal",
    "integrate_schedule",
    "interval_cost",
    "load_scenario",
    "modal_state",
    "optimize_family",
    "parse_scenario",
    "propagate_interval",
    "run_command",
    "solve_eigenpairs",
]
