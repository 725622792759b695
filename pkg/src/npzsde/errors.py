"""Exception types shared across the package."""


class AssumptionViolated(ValueError):
    """A structural model assumption does not hold.

    The message names the violated condition, e.g. "alpha4 < alpha2".
    Validation collects these into a report instead of raising mid-check.
    """

    def __init__(self, name: str, detail: str = ""):
        self.name = name
        self.detail = detail
        super().__init__(name if not detail else f"{name}: {detail}")


class NonFiniteInput(ValueError):
    """A state or parameter fed to a vector field is NaN or infinite."""


class NotApplicable(ValueError):
    """The requested quantity is undefined for these inputs
    (e.g. a closed form asked for outside its validity region)."""


class WindowTooShort(ValueError):
    """A regression/averaging window is too short to be meaningful."""


class ConfigError(ValueError):
    """A run configuration file is malformed or inconsistent."""


class StepOverflow(RuntimeError):
    """A simulated coordinate exceeded the overflow guard (1e300).

    Signals parameter or step-size pathology, not model behavior.
    """

    def __init__(self, message: str, time: float | None = None):
        self.time = time
        super().__init__(message)


class ToleranceNotMet(RuntimeError):
    """An adaptive numerical routine could not reach the requested tolerance."""
