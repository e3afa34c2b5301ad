"""Exception hierarchy shared by all wk modules."""


class WkError(Exception):
    """Base class for all errors raised by this package."""


class OutOfChart(WkError):
    """Point lies outside the validity region of the coordinate chart."""


class DegenerateMetric(WkError):
    """Metric determinant below the nondegeneracy floor at a queried point."""


class NonTimelike(WkError):
    """Velocity is not timelike (gamma = <u,u> <= 0) where timelike data is required."""


class GaugeViolated(WkError):
    """Natural-gauge constraints drifted beyond the abort threshold.

    Carries the partial trajectory accumulated so far, when available.
    """

    def __init__(self, message, trajectory=None):
        super().__init__(message)
        self.trajectory = trajectory


class StepUnderflow(WkError):
    """Adaptive stepper could not meet tolerances above the minimum step size."""

    def __init__(self, message, trajectory=None):
        super().__init__(message)
        self.trajectory = trajectory


class DifferentiationFailure(WkError):
    """Richardson half-step verification of a numeric derivative disagreed."""


class QuadratureFailure(WkError):
    """Action quadrature did not converge under refinement."""


class ConfigError(WkError):
    """Scenario configuration failed validation."""

    def __init__(self, message, field=None):
        super().__init__(message)
        self.field = field
