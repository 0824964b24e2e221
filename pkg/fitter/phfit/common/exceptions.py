class PhFitError(Exception):
    pass


class SingularMatrixError(PhFitError):
    """Factorization of a subgenerator failed (pivot below threshold)."""

    def __init__(self, message: str, pivot: float | None = None):
        super().__init__(message)
        self.pivot = pivot


class InteriorViolationError(PhFitError, ValueError):
    """A right-inverse was asked for a boundary point (zero probability or rate)."""

    def __init__(self, message: str, field: str, index: tuple[int, ...]):
        super().__init__(message)
        self.field = field
        self.index = index


class InvalidTargetError(PhFitError, ValueError):
    pass


class InvalidConfigError(PhFitError, ValueError):
    pass


class FitFailedError(PhFitError):
    """Every candidate in the population failed numerically."""


class QbdConvergenceError(PhFitError):
    pass


class UnstableQueueError(PhFitError):
    def __init__(self, rho: float):
        super().__init__(f"Queue is not stable: utilization rho={rho:.6g} >= 1")
        self.rho = rho


class SingularBoundaryError(PhFitError):
    pass


class MetricsInputError(PhFitError, ValueError):
    pass


class DocumentError(PhFitError):
    """A JSON document or table could not be parsed or failed validation."""

    def __init__(self, path: str, diagnostics: list[str]):
        self.path = path
        self.diagnostics = diagnostics
        super().__init__(f"{path}: " + "; ".join(diagnostics))
