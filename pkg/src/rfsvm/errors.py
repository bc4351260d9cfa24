"""Exception types shared across the package."""


class RfsvmError(Exception):
    """Base class for every error raised by this package."""


class FormatError(RfsvmError):
    """A file does not have the expected layout (bad header, ragged row, unknown key)."""


class ParseError(RfsvmError):
    """A cell could not be parsed as a finite number; the message names the location."""


class ValidationError(RfsvmError):
    """An object violates one of its structural invariants."""


class AlignmentError(RfsvmError):
    """Sample ids disagree between views or matrices that must share one order."""


class LabelError(RfsvmError):
    """A sample id has no label."""


class ParameterError(RfsvmError):
    """An argument is outside its documented range."""


class TrainingError(RfsvmError):
    """Training input is degenerate, e.g. only one class present."""


class StratificationError(RfsvmError):
    """A class is too small for the requested stratified split or folding."""


class ConvergenceError(RfsvmError):
    """The SMO solver hit its iteration cap before reaching the KKT tolerance."""

    def __init__(self, message: str, kkt_violation: float):
        super().__init__(message)
        self.kkt_violation = kkt_violation


# Errors that mean "your input is wrong" (CLI exit code 1), as opposed to
# runtime failures such as non-convergence (exit code 2).
VALIDATION_ERRORS = (
    FormatError,
    ParseError,
    ValidationError,
    AlignmentError,
    LabelError,
    ParameterError,
    TrainingError,
    StratificationError,
)
