"""Exception hierarchy shared by every module of the package."""


class BennError(Exception):
    """Base class for all package errors."""


class ShapeError(BennError, ValueError):
    """Array dimensions do not agree with what an operation expects."""


class ParameterError(BennError, ValueError):
    """A scalar parameter is outside its admissible range."""


class ConfigurationError(BennError, ValueError):
    """A belt mode, structural parameter set and ensemble are inconsistent."""


class ModeError(BennError, ValueError):
    """Operation not defined for the model's belt mode."""


class DegenerateResponseError(BennError, ValueError):
    """Response has no spread, so a data-driven ensemble cannot be built."""


class DivergenceError(BennError, ArithmeticError):
    """Training produced a non-finite loss."""

    def __init__(self, epoch, loss):
        super().__init__(f"non-finite training loss {loss!r} at epoch {epoch}")
        self.epoch = epoch
        self.loss = loss


class ParseError(BennError, ValueError):
    """A data file could not be parsed; carries the row/column location."""

    def __init__(self, message, row=None, column=None):
        where = []
        if row is not None:
            where.append(f"row {row}")
        if column is not None:
            where.append(f"column {column!r}")
        if where:
            message = f"{message} ({', '.join(where)})"
        super().__init__(message)
        self.row = row
        self.column = column


class NumericalError(BennError, ArithmeticError):
    """A linear-algebra step failed or was too ill-conditioned to trust."""

    def __init__(self, message, condition=None):
        if condition is not None:
            message = f"{message} (condition estimate {condition:.3e})"
        super().__init__(message)
        self.condition = condition


class BandwidthError(BennError, ValueError):
    """Median-heuristic bandwidth is undefined for the given data."""


class RankError(BennError, ValueError):
    """A basis matrix does not have full column rank."""
