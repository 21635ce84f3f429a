"""Exception types shared across the package.

Plain ``ValueError`` is used for ordinary argument validation; the classes
here exist where the CLI needs to map a failure onto a distinct exit code.
"""


class ConfigError(ValueError):
    """Malformed configuration file or unusable option combination."""


class AssumptionViolation(RuntimeError):
    """A structural assumption check on the nonlinearity failed."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class BlowUpError(RuntimeError):
    """A simulated field crossed the configured blow-up ceiling.

    Carries the truncated trajectory so callers can inspect the growth
    history up to the detection time.
    """

    def __init__(self, message, partial=None, t_detect=None):
        super().__init__(message)
        self.partial = partial
        self.t_detect = t_detect


class InstabilityError(RuntimeError):
    """Non-finite values appeared during time stepping."""
