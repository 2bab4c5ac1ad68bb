"""Exception hierarchy shared by the clustering services."""
from typing import Any, Optional


class ClusteringError(Exception):
    """Base class for every error raised by the services package."""


class DomainError(ClusteringError, ValueError):
    pass


class DimensionError(ClusteringError, ValueError):
    pass


class PreconditionError(ClusteringError, ValueError):
    pass


class ParameterError(ClusteringError, ValueError):
    pass


class MissingThresholdError(ClusteringError, ValueError):
    pass


class UnservableError(ClusteringError, ValueError):
    pass


class SingularSystemError(ClusteringError, ArithmeticError):
    pass


class DegeneracyError(ClusteringError, ArithmeticError):
    pass


class InfeasiblePerturbationError(ClusteringError, ArithmeticError):
    pass


class IndeterminateComparisonError(ClusteringError, ArithmeticError):
    """Interval refinement hit the precision cap without separating the operands."""

    def __init__(self, left: Any, right: Any, bits: int, context: Optional[str] = None):
        self.left = left
        self.right = right
        self.bits = bits
        self.context = context
        # set by the verification harness: case descriptor and the instance as JSON
        self.case: Optional[str] = None
        self.instance: Optional[str] = None
        message = f"could not order {left!r} and {right!r} within {bits} bits"
        if context:
            message = f"{context}: {message}"
        super().__init__(message)


class InstanceSizeError(ClusteringError, ValueError):
    """Generated instance would exceed the configured client cap."""

    # rough footprint of one client record plus its distance-table entries
    BYTES_PER_CLIENT = 2048

    def __init__(self, clients: int, cap: int):
        self.clients = clients
        self.cap = cap
        self.required_bytes = clients * self.BYTES_PER_CLIENT
        super().__init__(
            f"instance needs {clients} clients (cap {cap}), "
            f"roughly {self.required_bytes / 2**20:.1f} MiB"
        )
