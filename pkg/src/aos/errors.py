"""Shared exception types."""


class ValidationError(ValueError):
    """A parameter or configuration value violates a documented constraint."""


class WindowError(ValidationError):
    """An aperture/baseline window does not intersect the scanned path.

    Carries an optional machine-readable ``constraint`` string so CLI and
    HTTP layers can surface the feasible range.
    """

    def __init__(self, message: str, constraint: str | None = None):
        super().__init__(message)
        self.constraint = constraint


class MissingGroundTruth(RuntimeError):
    """A metric that needs simulated ground truth was applied to an imported stack."""
