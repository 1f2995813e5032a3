# errors.py
"""Exception hierarchy shared by every module of the solver."""
from typing import Any, Optional


class QuasinodalError(Exception):
    """Base class for all solver errors."""


class ConfigError(QuasinodalError):
    pass


class NonConvergence(QuasinodalError):
    pass


class InvalidSampleSpec(QuasinodalError):
    pass


class BadDimension(QuasinodalError):
    pass


class BadResolution(QuasinodalError):
    pass


class GridMismatch(QuasinodalError):
    pass


class TooFewNodes(QuasinodalError):
    pass


class ZeroField(QuasinodalError):
    pass


class NotProjectable(QuasinodalError):
    pass


class MissingSign(QuasinodalError):
    pass


class SeedNotProjectable(QuasinodalError):
    pass


class MaxItersExceeded(QuasinodalError):
    """Raised when an iteration cap is hit; keeps the last iterate and its report."""

    def __init__(self, message: str, field: Any = None, report: Any = None):
        super().__init__(message)
        self.field = field
        self.report = report


class InfeasiblePartition(QuasinodalError):
    pass


class InnerSolveFailed(QuasinodalError):
    def __init__(self, message: str, annulus: Optional[tuple] = None):
        super().__init__(message)
        self.annulus = annulus


class SeedConstructionFailed(QuasinodalError):
    def __init__(self, message: str, subdomain: Optional[tuple] = None,
                 mu: Optional[float] = None, l: Optional[float] = None):
        super().__init__(message)
        self.subdomain = subdomain
        self.mu = mu
        self.l = l


class MissingBaseline(QuasinodalError):
    pass
