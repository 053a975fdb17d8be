class NsqkdError(Exception):
    """Base class for domain errors raised by this package."""


class TableStructureError(NsqkdError):
    """A correlation table is missing setting pairs or has malformed entries."""


class TableValidationError(NsqkdError):
    """A correlation table is well formed but violates a probabilistic constraint."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class ReductionInapplicable(NsqkdError):
    """The reduced 24-variable LP needs the symmetric marginal structure of the Werner model."""


class InfeasibleLP(NsqkdError):
    pass


class IterationLimitExceeded(NsqkdError):
    """Raised when the simplex loop hits its iteration cap; with Bland's rule this means a bug."""


class NoSignChange(NsqkdError):
    pass


class SchemaError(NsqkdError):
    """A JSON document does not match the expected schema."""
