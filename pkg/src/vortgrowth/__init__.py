"""Numerical laboratory for exponential vorticity-gradient growth in 2D Euler on the torus."""

from .spectral import Grid, ScalarField, VectorField, biot_savart, make_grid, to_spectral
from .initial_data import Omega0Spec, build_omega0, theoretical_constants, verify_constraints
from .evolution import SimState, TimeStepConfig, initial_state, run_until, step_rk4
from .lagrangian import SnapshotStore, Tracer, backtrack, gradient_via_backtracking
from .diagnostics import DiagnosticsRecord, fit_exponential, key_integral, record

__version__ = "0.1.0"

__all__ = [
    "Grid", "ScalarField", "VectorField", "biot_savart", "make_grid", "to_spectral",
    "Omega0Spec", "build_omega0", "theoretical_constants", "verify_constraints",
    "SimState", "TimeStepConfig", "initial_state", "run_until", "step_rk4",
    "SnapshotStore", "Tracer", "backtrack", "gradient_via_backtracking",
    "DiagnosticsRecord", "fit_exponential", "key_integral", "record",
]
