"""Exception hierarchy shared by the filters, estimators and the CLI."""
from typing import Any, Optional


class MGARCHError(Exception):
    """Base class for every error raised by this package."""


class DimensionMismatch(MGARCHError, ValueError):
    """Array shapes disagree with the model order."""


class ConstraintViolation(MGARCHError, ValueError):
    """A parameter lies outside the admissible set."""

    def __init__(self, constraint: str, detail: str = ""):
        self.constraint = constraint
        message = f"constraint violated: {constraint}"
        if detail:
            message = f"{message} ({detail})"
        super().__init__(message)


class DuplicateEigenvalue(ConstraintViolation):
    """Two eigenvalue parameters coincide, so the ordering is not unique."""


class NonFiniteInput(MGARCHError, ValueError):
    """NaN or infinite values where finite numbers are required."""


class FilterOverflow(MGARCHError, ArithmeticError):
    """A log-volatility left the representable range."""

    def __init__(self, message: str, t: Optional[int] = None):
        self.t = t
        super().__init__(message)


class ExplosivePath(FilterOverflow):
    """A simulated path diverged."""


class DegenerateColumn(MGARCHError, ValueError):
    """A correlation window has a series that is identically zero."""

    def __init__(self, message: str, t: Optional[int] = None, column: Optional[int] = None):
        self.t = t
        self.column = column
        super().__init__(message)


class NonFiniteLikelihood(MGARCHError, ArithmeticError):
    """The quasi log-likelihood is not finite at some observation."""

    def __init__(self, t: int):
        self.t = t
        super().__init__(f"non-finite likelihood contribution at t={t}")


class NoConvergence(MGARCHError, RuntimeError):
    """Every optimizer start failed; the best partial report is attached."""

    def __init__(self, message: str, report: Any = None):
        self.report = report
        super().__init__(message)


class SingularInformation(MGARCHError, RuntimeError):
    """The Hessian-based information matrix is numerically singular."""


class IndexOutOfRange(MGARCHError, IndexError):
    """A series index does not exist for this dimension."""


class UnknownName(MGARCHError, ValueError):
    """A named item (DGP, norm, distribution, estimator) is not recognised."""


class SingularH(MGARCHError, ValueError):
    """A conditional covariance forecast cannot be inverted."""


class ParseError(MGARCHError, ValueError):
    """A CSV cell could not be read as a number."""

    def __init__(self, message: str, row: Optional[int] = None, column: Optional[str] = None):
        self.row = row
        self.column = column
        super().__init__(message)


class EmptyPanel(MGARCHError, ValueError):
    """No usable rows remain."""
