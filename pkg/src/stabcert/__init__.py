"""Sample-based verification of Lyapunov stability over generic settings."""

from .classk import ClassKMorphism, Envelope, identity_k, power_k
from .config import DEFAULT, Tolerances
from .core import (
    CheckFailed,
    CheckReport,
    ConfigurationError,
    NumericError,
    PosetCompare,
    PreconditionError,
    Setting,
    StableSpace,
    TimeMonoid,
)
from .flows import Flow, StabilityWitness, check_stable
from .lyapunov import (
    CandidateV,
    HorizonMode,
    HorizonPolicy,
    InconclusiveTail,
    construct_converse_V,
    verify_lyapunov_theorem,
)

__version__ = "0.1.0"

__all__ = [
    "CandidateV", "CheckFailed", "CheckReport", "ClassKMorphism", "ConfigurationError",
    "DEFAULT", "Envelope", "Flow", "HorizonMode", "HorizonPolicy", "InconclusiveTail",
    "NumericError", "PosetCompare", "PreconditionError", "Setting", "StabilityWitness",
    "StableSpace", "TimeMonoid", "Tolerances", "check_stable", "construct_converse_V",
    "identity_k", "power_k", "verify_lyapunov_theorem",
]
