"""Exception hierarchy shared by all gzk modules."""


class GzkError(Exception):
    """Base class for every error raised by this package."""


class DomainError(GzkError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class ConfigurationError(GzkError, ValueError):
    """Invalid user-facing configuration (counts, regularisation, ...)."""


class UnsupportedError(GzkError, NotImplementedError):
    """The requested combination of parameters is not implemented."""


class InvalidKernelError(GzkError, ValueError):
    """Kernel data violate positive definiteness (negative Taylor or Gegenbauer coefficients)."""


class NumericOverflowError(GzkError, OverflowError):
    """An intermediate quantity is not representable in double or 64-bit integer arithmetic."""


class SolverError(GzkError, ArithmeticError):
    """A dense linear solve or eigendecomposition failed or was ill-conditioned."""


class IngestionError(GzkError, ValueError):
    """Malformed input data."""
