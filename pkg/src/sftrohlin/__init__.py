"""Shifts of finite type, their AF algebras, and Rohlin towers for the shift automorphism."""

from .config import DEFAULT_CONFIG, RunConfig
from .errors import (
    ConvergenceError,
    DegeneracyError,
    InfeasibleError,
    InputError,
    NotPrimitiveError,
    PreconditionError,
    ResourceCapError,
    SFTError,
    UndecidedError,
    VerificationError,
)
from .sft_core import Interval, Path, TransitionMatrix, count_paths, enumerate_paths, is_primitive
from .measure import ClopenSet, Cylinder, perron_data

__version__ = "0.1.0"
