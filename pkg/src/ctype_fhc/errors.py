"""Exception hierarchy shared by every module of the package."""


class CTypeError(Exception):
    """Base class for all errors raised by ctype_fhc."""


class DyadicOverflow(CTypeError, ArithmeticError):
    """A dyadic exponent left the supported 64-bit range."""


class ScheduleError(CTypeError, ValueError):
    """A parameter schedule violates one of its defining constraints."""


class HorizonExceeded(CTypeError):
    """A computation needs block data beyond the materialized horizon."""


class BudgetExceeded(CTypeError):
    """A dense construction would exceed its memory budget."""


class InvertibilityError(CTypeError):
    """The inverse was requested for an operator that does not meet its hypotheses."""


class PreconditionError(CTypeError, ValueError):
    """An operation was called outside its documented domain."""


class PlanError(CTypeError):
    """No admissible constant could be found within the horizon."""
