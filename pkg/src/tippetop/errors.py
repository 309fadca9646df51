"""Exception types raised across the package."""


class TippeTopError(Exception):
    """Base class for all package errors."""


class ValidationError(TippeTopError, ValueError):
    """Invalid parameters, states or scenario fields."""

    def __init__(self, message, field=None):
        super().__init__(message)
        self.field = field


class ExistenceError(ValidationError):
    """Requested member of an equilibrium family does not exist."""


class ChartError(TippeTopError, ValueError):
    """State lies too close to a pole of the reduced chart (gamma3 = +-1)."""

    def __init__(self, gamma3, message=None):
        super().__init__(message or f"reduced chart singular at gamma3={gamma3!r}")
        self.gamma3 = gamma3


class StepSizeError(TippeTopError, RuntimeError):
    """Adaptive step size fell below dt_min."""

    def __init__(self, t, dt):
        super().__init__(f"step size underflow at t={t!r} (dt={dt!r})")
        self.t = t
        self.dt = dt


class LiftOffWarning(UserWarning):
    """Normal reaction became negative: the ball would leave the plane."""
