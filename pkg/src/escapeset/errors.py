"""Exception types raised across the package."""

from __future__ import annotations


class DynamicsError(Exception):
    """Base class for all errors raised by escapeset."""


class VariantMismatch(DynamicsError, TypeError):
    """Operands belong to different phase-space families (euclidean vs symbolic)."""


class NonInvertible(DynamicsError):
    """Negative time requested on a system without an inverse."""


class HorizonExhausted(DynamicsError):
    """A symbolic point was shifted past its materialization horizon."""


class Diverged(DynamicsError):
    """The trajectory left every bounded region before the requested time.

    ``blowup_time`` is the (signed) time at which this was detected; for the
    closed-form spiral it is the exact finite-time blowup.
    """

    def __init__(self, blowup_time: float, message: str | None = None, members=None):
        self.blowup_time = float(blowup_time)
        # per-point (index, blowup_time) pairs when raised for a point set
        self.members = list(members or [])
        super().__init__(message or f"trajectory diverged at t={self.blowup_time:.6g}")


class DomainError(DynamicsError, ValueError):
    """A map produced a non-real value (e.g. log of a negative number)."""

    def __init__(self, message: str, position: int | None = None):
        self.position = position
        super().__init__(message)


class NotAConjugacy(DynamicsError):
    """The supplied map fails the conjugacy residual check."""


class OrbitNotBounded(DynamicsError):
    """A sampled orbit left the region it was required to stay in."""


class NotInvariant(DynamicsError):
    """A candidate set is not mapped into itself by the generators."""


class ScenarioError(DynamicsError):
    """Malformed scenario file or reference to an undeclared name."""
