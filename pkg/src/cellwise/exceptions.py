"""Exception hierarchy shared by all modules."""


class CellwiseError(ValueError):
    """Base class for data and numerical errors raised by this package."""


class ParseError(CellwiseError):
    """Malformed CSV input. Carries the 1-based row and column of the problem."""

    def __init__(self, message, row=None, column=None):
        loc = []
        if row is not None:
            loc.append(f"row {row}")
        if column is not None:
            loc.append(f"column {column}")
        if loc:
            message = f"{message} ({', '.join(loc)})"
        super().__init__(message)
        self.row = row
        self.column = column


class DegenerateScaleError(CellwiseError):
    """A column has zero robust scale, so it cannot be standardized."""

    def __init__(self, column, message=None):
        super().__init__(message or f"column {column!r} has zero robust scale")
        self.column = column


class SingularMatrixError(CellwiseError):
    """A matrix that must be inverted is (numerically) singular."""

    def __init__(self, message, lambda_min=None):
        super().__init__(message)
        self.lambda_min = lambda_min


class ConvergenceError(CellwiseError):
    """An iterative algorithm hit its iteration cap.

    ``last`` holds the final iterate and ``trace`` the per-iteration history
    (objective values or step norms), when available.
    """

    def __init__(self, message, last=None, trace=None):
        super().__init__(message)
        self.last = last
        self.trace = trace
