"""Numerical laboratory for work statistics and the Jarzynski equality on a spin-1 system."""
from .core import NumericalGuardError, eigh, gibbs_state, spin1_operator
from .evolution import overlap_trace, propagate
from .kernels import backend
from .protocol import DEFAULT_LAMBDA, Schedule, adiabaticity_factor, h_of_t
from .thermo import je_check, tpm_conditional, work_distribution

__version__ = "0.1.0"

__all__ = [
    "NumericalGuardError",
    "DEFAULT_LAMBDA",
    "Schedule",
    "adiabaticity_factor",
    "backend",
    "eigh",
    "gibbs_state",
    "h_of_t",
    "je_check",
    "overlap_trace",
    "propagate",
    "spin1_operator",
    "tpm_conditional",
    "work_distribution",
]
