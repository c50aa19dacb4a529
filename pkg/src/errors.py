from typing import Optional


class KrigingError(Exception):
    """Base exception for every error raised by the library."""

    pass


class KernelDomainError(KrigingError, ValueError):
    """Raised for kernel parameters or inputs outside their domain (ν ≤ 0, x ≤ 0, θ ≤ 0, bad index)."""

    pass


class DuplicatePointError(KernelDomainError):
    """Raised when a design contains two identical points."""

    pass


class IdentifiabilityError(KrigingError):
    """Raised when the trend model is not identifiable (n ≤ p or rank(H) < p)."""

    pass


class DegenerateObservationError(KrigingError):
    """Raised when y lies in span(H): the quadratic form y'W(W'ΣW)^-1W'y vanishes."""

    pass


class FactorizationError(KrigingError):
    """Raised when a correlation matrix cannot be Cholesky-factorized."""

    pass


class PriorBoundError(KrigingError):
    """Raised in strict mode when a conditional prior exceeds its universal upper bound."""

    pass


class ExistenceViolationError(KrigingError):
    """Raised when a conditional posterior tail does not decay on the θ grid."""

    pass


class EstimationError(KrigingError):
    """Raised when every optimizer restart fails to produce a finite objective."""

    pass


class DataFileError(KrigingError):
    """Raised for malformed data files."""

    pass


class ConfigError(KrigingError):
    """Raised for malformed run configuration files, with location diagnostics."""

    def __init__(
        self, message: str, line: Optional[int] = None, column: Optional[int] = None
    ):
        self.line = line
        self.column = column
        location = ""
        if line is not None:
            location = f" (line {line}" + (f", column {column}" if column else "") + ")"
        super().__init__(f"{message}{location}")
