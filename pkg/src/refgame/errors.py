"""Exception types shared across the package."""


class RefgameError(Exception):
    """Base class for all package errors."""


class PreconditionError(RefgameError, ValueError):
    """An input violates a documented precondition (shape, invariant, role)."""


class NumericalFailure(RefgameError, RuntimeError):
    """A numerical routine could not produce a trustworthy result.

    The ``diagnostics`` attribute carries whatever the failing routine knew
    at the time (iteration counts, residuals, eigenvalues).
    """

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = dict(diagnostics or {})


class PurificationError(PreconditionError):
    """The environment is too small to purify the given state."""


class InconsistentTranscriptError(PreconditionError):
    """Two purifications do not share the same reduced state."""
