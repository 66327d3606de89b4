"""Exception hierarchy shared by every module of the package."""


class QuadPidaError(Exception):
    """Base class for all package errors."""


class SingularAttitude(QuadPidaError):
    """Pitch is too close to +/-90 deg for the Euler-rate map to be inverted."""


class Diverged(QuadPidaError):
    """A simulated state left the admissible envelope."""

    def __init__(self, message: str, time: float | None = None):
        super().__init__(message)
        self.time = time


class NotEquilibrium(QuadPidaError):
    pass


class Unstable(QuadPidaError):
    """No positive definite Lyapunov solution exists (a finding, not a crash)."""


class SingularPencil(Unstable):
    """Two eigenvalues of A sum to zero, so the Lyapunov operator is singular."""


class NonPositiveDt(QuadPidaError):
    pass


class NotSettled(QuadPidaError):
    pass


class ObjectiveFailure(QuadPidaError):
    def __init__(self, message: str, point=None):
        super().__init__(message)
        self.point = point


class TargetReached(QuadPidaError):
    pass


class TargetNeverAcquired(QuadPidaError):
    pass


class BehindCamera(QuadPidaError):
    pass


class DegenerateDisparity(QuadPidaError):
    pass


class DomainError(QuadPidaError, ValueError):
    pass


class DisjointBoxes(QuadPidaError):
    pass


class EmptyAnchorSet(QuadPidaError):
    pass


class NoPositiveAnchors(QuadPidaError):
    pass


class ConfigError(QuadPidaError):
    pass
