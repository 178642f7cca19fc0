"""Floquet analysis of population inversion in pulse-driven N-level systems."""

__version__ = "0.1.0"

from .adiabatic import adiabatic_criterion, adiabatic_errors, adiabatic_propagator, adiabatic_sweep
from .control import ControlProblem, objective, optimize, scan
from .errors import (BudgetExhausted, ConfigError, DegenerateEigenvectors, DimensionMismatch,
                     DomainError, FloquetPIError, FrameMatchFailure, HermiticityViolation,
                     NoCarrier, NormViolation, NotUnitary, ParallelVectors, StepLimitExceeded)
from .floquet import floquet_spectrum, inversion_criterion, orbit, rational_approx
from .model import (NLevelSystem, PulseShape, as_state, basis_state, eval_field, gaussian,
                    rectangular, sampled, sin2, validate_system)
from .nlevel import (Scenario, build_rotation, block_residual, classify_transfer,
                     condition_count, effective_pair)
from .propagation import (IntegratorConfig, global_phase_chi, monodromy, propagate_state,
                          propagator_over, trace_integral)
from .su2 import (compose_su2, decompose_su2, eigensystem_2ls, pi_angle_check, pspc_targets,
                  pspi_delta2, sufficient_pi_check)

__all__ = [
    "__version__",
    "adiabatic_criterion",
    "adiabatic_errors",
    "adiabatic_propagator",
    "adiabatic_sweep",
    "ControlProblem",
    "objective",
    "optimize",
    "scan",
    "BudgetExhausted",
    "ConfigError",
    "DegenerateEigenvectors",
    "DimensionMismatch",
    "DomainError",
    "FloquetPIError",
    "FrameMatchFailure",
    "HermiticityViolation",
    "NoCarrier",
    "NormViolation",
    "NotUnitary",
    "ParallelVectors",
    "StepLimitExceeded",
    "floquet_spectrum",
    "inversion_criterion",
    "orbit",
    "rational_approx",
    "NLevelSystem",
    "PulseShape",
    "as_state",
    "basis_state",
    "eval_field",
    "gaussian",
    "rectangular",
    "sampled",
    "sin2",
    "validate_system",
    "Scenario",
    "build_rotation",
    "block_residual",
    "classify_transfer",
    "condition_count",
    "effective_pair",
    "IntegratorConfig",
    "global_phase_chi",
    "monodromy",
    "propagate_state",
    "propagator_over",
    "trace_integral",
    "compose_su2",
    "decompose_su2",
    "eigensystem_2ls",
    "pi_angle_check",
    "pspc_targets",
    "pspi_delta2",
    "sufficient_pi_check",
]
