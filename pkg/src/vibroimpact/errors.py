"""Exception types raised by the vibroimpact library."""


class VibroImpactError(Exception):
    """Base class for all library errors."""


class ValidationError(VibroImpactError, ValueError):
    """Invalid parameters or state."""


class BracketFailure(VibroImpactError):
    """Event root finding could not bracket a sign change."""


class EventBudgetExceeded(VibroImpactError):
    """More events than the configured budget in one simulation."""


class InconsistentEvent(VibroImpactError):
    """An event was located that contradicts the current motion regime."""


class PermanentRest(VibroImpactError):
    """Sticking can never release because friction dominates the forcing."""


class ItineraryMismatch(VibroImpactError):
    """Finite-difference stencil orbits have different event itineraries."""


class StickingOnPath(VibroImpactError):
    """An operation requiring a non-sticking orbit met a sticking event."""


class NotNonSticking(VibroImpactError):
    """An operation requiring a non-sticking orbit met a turning or sticking."""


class NoConvergence(VibroImpactError):
    """Iteration failed to reach the requested tolerance."""


class SingularJacobian(VibroImpactError):
    """Newton matrix is numerically singular."""


class BranchLost(VibroImpactError):
    """Continuation could not re-acquire the orbit branch."""


class NotElliptic(VibroImpactError):
    """Rotation number requested for a non-elliptic matrix (|trace| >= 2)."""


class EigenvaluesReal(VibroImpactError):
    """A complex eigenvalue pair was required but the spectrum is real."""


class IntervalDomainError(VibroImpactError):
    """Interval argument leaves the domain of the requested function."""


class IntervalDivisionByZero(VibroImpactError):
    """Interval division by an interval containing zero."""


class ItineraryAmbiguous(VibroImpactError):
    """Rigorous event ordering could not be certified."""


class NotCertifiablyElliptic(VibroImpactError):
    """Interval trace does not lie strictly inside (-2, 2)."""


class UndefinedDiagnostic(VibroImpactError):
    """Diagnostic undefined for this orbit (sticking window)."""
