"""Exception types raised across the package."""


class SocRescaleError(Exception):
    """Base class for all package-specific errors."""


class InstanceFormatError(SocRescaleError):
    """Malformed instance or certificate file."""


class RankDeficientError(SocRescaleError):
    """The Gram matrix A A^T is numerically rank deficient.

    Carries the index of the failing Cholesky pivot.
    """

    def __init__(self, pivot_index: int, pivot_value: float):
        self.pivot_index = pivot_index
        self.pivot_value = pivot_value
        super().__init__(
            f"A A^T rank deficient: pivot {pivot_index} = {pivot_value:.3e}"
        )


class NotApplicableError(SocRescaleError):
    """The block is interior or zero, so no opposing cone vector exists."""


class DegenerateStepError(SocRescaleError):
    """z and p coincide; the line-search step is undefined."""


class ProgressViolatedError(SocRescaleError):
    """An inner-iteration step failed the guaranteed 1/2 progress law."""


class IterationCapExceededError(SocRescaleError):
    """The inner procedure ran past its iteration bound (numerical breakdown)."""


class OuterCapExceededError(SocRescaleError):
    """The outer rescaling loop ran past its iteration cap."""


class CertificateError(SocRescaleError):
    """A certificate failed re-verification in original coordinates."""


class NoInteriorPairError(SocRescaleError):
    """The primal-dual pair has no strictly interior feasible point.

    Raised by the two-phase SOCP driver when the feasibility run produces
    a dual certificate instead of an interior point. The offending
    certificate is attached.
    """

    def __init__(self, message: str, certificate=None):
        self.certificate = certificate
        super().__init__(message)
