"""Trajectory simulation and retrodictive estimation for a monitored qubit."""

__version__ = "0.1.0"

from .dynamics import ConfigError, ModelParams, NumericalFailure, Setup
from .filtering import filter_states
from .smoothing import (
    backward_effect,
    brute_force_smooth,
    sample_hypothetical_records,
    smooth,
)
from .states import bloch_to_state, fidelity, purity, state_to_bloch, trsd
from .unraveling import MeasurementRecord, TrueTrajectory, generate_true_trajectory

__all__ = [
    "ConfigError",
    "MeasurementRecord",
    "ModelParams",
    "NumericalFailure",
    "Setup",
    "TrueTrajectory",
    "backward_effect",
    "bloch_to_state",
    "brute_force_smooth",
    "fidelity",
    "filter_states",
    "generate_true_trajectory",
    "purity",
    "sample_hypothetical_records",
    "smooth",
    "state_to_bloch",
    "trsd",
]
