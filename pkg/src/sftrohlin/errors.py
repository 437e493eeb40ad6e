"""Exception hierarchy shared by every module."""


class SFTError(Exception):
    """Base class for all errors raised by this package."""


class InputError(SFTError, ValueError):
    """Malformed or invariant-violating input (bad matrix, bad path, ...)."""


class PreconditionError(SFTError, ValueError):
    """An operation was called outside its stated domain."""


class NotPrimitiveError(PreconditionError):
    pass


class ResourceCapError(SFTError):
    """A configured cap would be exceeded.  ``required`` carries the size asked for."""

    def __init__(self, message, required=None, cap=None):
        super().__init__(message)
        self.required = required
        self.cap = cap


class ConvergenceError(SFTError):
    pass


class DegeneracyError(SFTError):
    """Spectral gap missing or a matrix numerically singular."""


class UndecidedError(SFTError):
    """An exact order question could not be settled within the search cap."""


class InfeasibleError(SFTError):
    pass


class VerificationError(SFTError):
    """A constructed object failed its own postcondition check."""

    def __init__(self, message, norm=None):
        super().__init__(message)
        self.norm = norm
