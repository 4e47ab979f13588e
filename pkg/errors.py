"""
Exception hierarchy for txholo.

Configuration problems map to CLI exit status 2, numerical failures to 3.
"""
from typing import Optional, Sequence, Tuple


class TxHoloError(Exception):
    """Base class for every error raised by txholo."""

    exit_status = 1


class ConfigError(TxHoloError, ValueError):
    """Invalid specification, malformed input file or bad option combination."""

    exit_status = 2


class NetworkFormatError(ConfigError):
    """Malformed network config file."""

    def __init__(self, message: str, path: Optional[str] = None,
                 line_number: Optional[int] = None):
        self.path = path
        self.line_number = line_number
        location = ""
        if path is not None:
            location = f"{path}:"
            if line_number is not None:
                location += f"{line_number}:"
            location += " "
        super().__init__(f"{location}{message}")


class AsymmetricMatrixError(ConfigError):
    """A coupling matrix is not symmetric."""

    def __init__(self, name: str, indices: Tuple[int, int], delta: float):
        self.name = name
        self.indices = indices
        self.delta = delta
        i, j = indices
        super().__init__(
            f"{name} is not symmetric at ({i},{j}): |M_ij - M_ji| = {delta:.3e}"
        )


class NotPositiveSemidefiniteError(ConfigError):
    """A coupling matrix has an eigenvalue below the PSD tolerance."""

    def __init__(self, name: str, index: int, eigenvalue: float):
        self.name = name
        self.index = index
        self.eigenvalue = eigenvalue
        super().__init__(
            f"{name} is not positive semi-definite: eigenvalue #{index} = {eigenvalue:.6e}"
        )


class DimensionMismatchError(ConfigError):
    """Array shapes that must agree do not."""

    def __init__(self, what: str, expected: Sequence[int], actual: Sequence[int]):
        self.expected = tuple(expected)
        self.actual = tuple(actual)
        super().__init__(f"{what}: expected shape {self.expected}, got {self.actual}")


class NumericalError(TxHoloError, ArithmeticError):
    """
    A numerical procedure failed.

    Args:
        message: Human-readable description
        operation: Name of the operation that failed
        best_estimate: Best value available at the point of failure, if any
    """

    exit_status = 3

    def __init__(self, message: str, operation: str = "",
                 best_estimate: Optional[float] = None):
        self.operation = operation
        self.best_estimate = best_estimate
        prefix = f"{operation}: " if operation else ""
        suffix = ""
        if best_estimate is not None:
            suffix = f" (best estimate {best_estimate!r})"
        super().__init__(f"{prefix}{message}{suffix}")


class QuadratureError(NumericalError):
    """Adaptive quadrature did not reach the requested tolerance."""


class SingularJunctionError(NumericalError):
    """The junction matrix A(omega) is singular."""

    def __init__(self, omega: float, operation: str = "network_s_matrix"):
        self.omega = omega
        super().__init__(f"junction matrix A(omega) is singular at omega={omega!r}",
                         operation=operation)


class BranchError(NumericalError):
    """A complex branch evaluation left an imaginary residue above tolerance."""


class ConvergenceError(NumericalError):
    """An iterative solver ran out of iterations."""
