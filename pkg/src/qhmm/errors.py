"""Exception hierarchy and process exit codes shared across the toolkit."""


class ToolkitError(Exception):
    """Base class for every error raised by this package."""


class ValidationError(ToolkitError):
    """A model, file, or argument violates one of its invariants."""


class DimensionMismatchError(ValidationError):
    """Operands or operators have incompatible dimensions."""


class UnknownSymbolError(ValidationError):
    """A sequence contains a symbol outside the model alphabet."""


class EnumerationTooLargeError(ValidationError):
    """Exhaustive enumeration would exceed the sequence-count cap."""


class TimeStepTooLargeError(ValidationError):
    """The requested time step is too coarse for a faithful discretization."""


class ModelFormatError(ToolkitError):
    """A model file is malformed: bad JSON, schema, or format version."""


class ZeroProbabilityError(ToolkitError):
    """Conditioning on a symbol whose probability is numerically zero."""


class NumericFailureError(ToolkitError):
    """A numerical guarantee (trace, positivity, convergence) was violated."""


class TimeStepWarning(UserWarning):
    """The time step is large enough to degrade discretization accuracy."""


# Exit codes used by the command-line interface.
EXIT_OK = 0
EXIT_FAIL = 1
EXIT_VALIDATION = 2
EXIT_IO = 3
EXIT_NUMERIC = 4
