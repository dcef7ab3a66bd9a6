"""Exception hierarchy shared by all kdvlab modules."""


class KdvLabError(Exception):
    """Base class for all kdvlab errors."""


class ConfigurationError(KdvLabError, ValueError):
    """Bad grid size, geometry, parameter or config key."""


class UsageError(KdvLabError, ValueError):
    """An operation was applied to data it does not support."""


class NumericalError(KdvLabError, ArithmeticError):
    """Base class for failures of a numerical computation."""


class SpectrumIntersection(NumericalError):
    """The energy -kappa^2 is not below the spectrum of -d^2 + q."""


class AccuracyError(NumericalError):
    """A computation did not reach its accuracy target."""


class InconsistencyError(NumericalError):
    """Two independent routes disagree beyond tolerance."""


class InadmissibleError(NumericalError):
    """(q, kappa) fails the smallness guard; carries the verdict."""

    def __init__(self, verdict):
        super().__init__(verdict.message)
        self.verdict = verdict


class IntegrationFailure(NumericalError):
    """Time integration failed; carries the partial trajectory."""

    def __init__(self, message, trajectory=None):
        super().__init__(message)
        self.trajectory = trajectory
