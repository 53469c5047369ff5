"""Exception hierarchy shared by all gamebound modules."""


class GameboundError(Exception):
    """Base class for all errors raised by this package."""


class ValidationError(GameboundError, ValueError):
    """Invalid argument values (non-finite entries, bad parameters, ...)."""


class DimensionError(ValidationError):
    """Shape or length mismatch between matrices, vectors and player dims."""


class UnsupportedArityError(ValidationError):
    """Operation defined only for a specific player count (usually n=2)."""


class NotMinMaxError(ValidationError):
    """Game lacks the antisymmetric-coupling / PSD structure of a min-max problem."""


class SingularJacobianError(GameboundError):
    """Jacobian is numerically singular; carries the failing pivot index."""

    def __init__(self, message, pivot_index=None):
        super().__init__(message)
        self.pivot_index = pivot_index


class SpectralFailureError(GameboundError):
    """Eigenvalue iteration failed to converge; carries the stuck index if known."""

    def __init__(self, message, stuck_index=None):
        super().__init__(message)
        self.stuck_index = stuck_index


class UndefinedKappaError(GameboundError):
    """Condition number undefined (zero denominator or near-singular spectrum)."""


class DegenerateBoundsError(GameboundError):
    """Block spectral bounds make a condition-number formula degenerate."""


class InsufficientDataError(GameboundError):
    """Too few usable points for a statistical estimate."""
