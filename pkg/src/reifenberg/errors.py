"""Exception hierarchy shared by all modules."""


class ReifError(Exception):
    """Base class for library errors."""


class InputError(ReifError, ValueError):
    """Bad arguments: dimension mismatch, out-of-range parameters, malformed files."""


class EmptySliceError(ReifError):
    """A ball query returned no mass where some was required."""


class DegeneracyError(ReifError):
    """Points fail an independence requirement.

    Attributes
    ----------
    index : int
        First index whose clearance fell below the threshold.
    """

    def __init__(self, message, index=None):
        super().__init__(message)
        self.index = index


class MisclassificationError(ReifError):
    """A covering routine was called on a ball of the wrong type."""


class InternalConsistencyError(ReifError):
    """A certificate produced by the library failed its own re-check."""


class DegenerateFieldError(ReifError):
    """Eigen-gap collapse in a glued subspace field."""

    def __init__(self, message, point=None):
        super().__init__(message)
        self.point = point


class ProjectionStallError(ReifError):
    """Fixed-point projection did not converge."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class InsufficientDataError(ReifError):
    """Too few samples for a statistical fit."""
