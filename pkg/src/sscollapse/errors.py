"""Exception types shared across the package."""


class SSCollapseError(Exception):
    """Base class for package errors."""


class DomainMismatchError(SSCollapseError):
    """Operands live on different domains (s-line vs r-half-line)."""


class MalformedDataError(SSCollapseError):
    """Initial data violates a representation invariant."""


class ConstructionError(SSCollapseError):
    """A derived object (e.g. a perturbation mode) cannot be built."""


class HorizonFormed(SSCollapseError):
    """Raised internally when a slice reaches the horizon threshold."""

    def __init__(self, u, r, m):
        super().__init__(f"horizon threshold reached at u={u:.6g}, r={r:.6g}, m={m:.6g}")
        self.u = u
        self.r = r
        self.m = m


class StepFailure(SSCollapseError):
    """Adaptive step control could not produce an acceptable step."""


class CoverageError(SSCollapseError):
    """Requested seed/curve/time range not covered by the stored data."""
