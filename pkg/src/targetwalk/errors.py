"""Exception types shared across the package."""


class AdmissibilityError(ValueError):
    """A strategy emitted a decision the stand-still budget forbids.

    Carries the time step at which the violation occurred so batch runs
    can point at the offending trial.
    """

    def __init__(self, message: str, time_step: int | None = None,
                 trial_index: int | None = None):
        super().__init__(message)
        self.time_step = time_step
        self.trial_index = trial_index


class ScheduleError(ValueError):
    """Window schedule construction failed (inputs outside the usable regime)."""


class BudgetError(RuntimeError):
    """An exact computation was refused because it exceeds the configured budget."""

    def __init__(self, message: str, required_transitions: float | None = None,
                 required_bytes: float | None = None):
        super().__init__(message)
        self.required_transitions = required_transitions
        self.required_bytes = required_bytes


class SignatureError(ValueError):
    """A strategy's declared state signature is not supported by the caller."""
