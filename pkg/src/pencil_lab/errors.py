"""Exception hierarchy shared by the library and the CLI."""


class PencilLabError(Exception):
    """Base class for all library errors."""


class InputError(PencilLabError, ValueError):
    """Malformed or out-of-contract input (CLI exit code 2)."""


class StructuralError(PencilLabError):
    """The problem violates a structural requirement of the construction,
    e.g. a root-count or divisibility property (CLI exit code 1)."""


class DegenerateProblemError(PencilLabError):
    """Numerically indeterminate situation: near-real roots, singular or
    ill-conditioned boundary systems (CLI exit code 3)."""


class RootFindingError(DegenerateProblemError):
    """Root finder could not certify its output. Carries partial results."""

    def __init__(self, message: str, partial=None):
        super().__init__(message)
        self.partial = partial
