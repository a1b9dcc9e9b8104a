"""Cavity-tuning schedules for a tunable-cavity photon memory.

Storage and retrieval of double-sided exponential single photons in an
optically thin atomic ensemble, with analytic schedules, two independent
solvers for the reduced dynamics, and efficiency/jitter analysis.
"""
from ._kernels import BACKEND
from .params import PhysicalParams, DimensionlessParams, ParamsError, derive
from .schedule import EmissionSchedule, build_emission, norm, norm_truncated, optimal_window
from .dynamics import SimulationConfig, SimulationResult, integrate_ode, closed_form, ledger
from .analysis import efficiency, jitter_scan, asymptotic_audit, design

__version__ = "0.1.0"

__all__ = [
    "BACKEND", "PhysicalParams", "DimensionlessParams", "ParamsError", "derive",
    "EmissionSchedule", "build_emission", "norm", "norm_truncated", "optimal_window",
    "SimulationConfig", "SimulationResult", "integrate_ode", "closed_form", "ledger",
    "efficiency", "jitter_scan", "asymptotic_audit", "design",
]
