"""Solvers for mean field games driven by time-changed jump diffusions.

The backward value equation and the forward distribution equation are coupled
through the control rate of a jump-diffusion clock; this package discretizes
the generator as a finite nonnegative stencil, integrates both equations with
monotone explicit steps that are exact transposes of each other, and couples
them through a damped fixed-point iteration.
"""

from .fp import (CFLViolationError, ConservationError, DualTrajectory,
                 MeasureTrajectory, holmgren_residual, solve_dual, solve_fp)
from .grid import (CheckReport, GridFunction, GridSpec, ProbabilityVector,
                   adjoint, read_binary, spectral_reference, write_binary,
                   write_csv)
from .hamiltonian import (DivergentSupremumError, GainFunction, Hamiltonian,
                          NonDifferentiableError, closed_form,
                          conjugate_numeric, gain_function, optimal_control)
from .hjb import (ControlField, InstabilityError, ValueTrajectory,
                  comparison_check, control_field, holder_report, solve_hjb)
from .levy import (AnisotropicStableSpec, AtomsSpec, CGMYSpec, DiscreteLevyOp,
                   InvalidMeasureError, LevyTriplet, LyapunovFn,
                   NoLyapunovError, QuadratureError, ResolutionError,
                   StableSpec, TruncatedSpec, apply_levy, build_epsilon_approx,
                   construct_lyapunov, default_log_lyapunov, holder_seminorm,
                   lk_norm, symbol)
from .mfg import (Coupling, MFGSolution, UniquenessCheck, critical_exponent,
                  d0_distance, duality_residual, solve_mfg,
                  uniqueness_condition)

__version__ = "0.1.0"

__all__ = [
    "CheckReport", "GridFunction", "GridSpec", "ProbabilityVector", "adjoint",
    "read_binary", "spectral_reference", "write_binary", "write_csv",
    "AnisotropicStableSpec", "AtomsSpec", "CGMYSpec", "DiscreteLevyOp",
    "InvalidMeasureError", "LevyTriplet", "LyapunovFn", "NoLyapunovError",
    "QuadratureError", "ResolutionError", "StableSpec", "TruncatedSpec",
    "apply_levy", "build_epsilon_approx", "construct_lyapunov",
    "default_log_lyapunov", "holder_seminorm", "lk_norm", "symbol",
    "DivergentSupremumError", "GainFunction", "Hamiltonian",
    "NonDifferentiableError", "closed_form", "conjugate_numeric",
    "gain_function", "optimal_control",
    "ControlField", "InstabilityError", "ValueTrajectory", "comparison_check",
    "control_field", "holder_report", "solve_hjb",
    "CFLViolationError", "ConservationError", "DualTrajectory",
    "MeasureTrajectory", "holmgren_residual", "solve_dual", "solve_fp",
    "Coupling", "MFGSolution", "UniquenessCheck", "critical_exponent",
    "d0_distance", "duality_residual", "solve_mfg", "uniqueness_condition",
    "__version__",
]
