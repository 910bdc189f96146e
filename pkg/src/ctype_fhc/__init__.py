"""Exact dyadic computations for generalized C-type operators on l1."""

__version__ = "0.1.0"

from .dyadic import Dyadic, FinVec, dist_l1, norm_l1
from .errors import (BudgetExceeded, CTypeError, DyadicOverflow, HorizonExceeded, InvertibilityError, PlanError,
                     PreconditionError, ScheduleError)
from .operator import OperatorSpec, SectionOracle, apply_T, apply_T_inv, apply_T_power, derive_structure, finite_section_matrix
from .schedule import Schedule

__all__ = [
    "Dyadic", "FinVec", "norm_l1", "dist_l1", "Schedule", "OperatorSpec", "derive_structure", "apply_T",
    "apply_T_inv", "apply_T_power", "finite_section_matrix", "SectionOracle", "CTypeError", "DyadicOverflow",
    "ScheduleError", "HorizonExceeded", "BudgetExceeded", "InvertibilityError", "PreconditionError", "PlanError",
]
