"""Exception types shared across the package."""


class InfeasibleStateError(ValueError):
    """A configuration violates the holonomic constraints beyond tolerance.

    Carries ``max_violation``, the largest |constraint value| found.
    """

    def __init__(self, message, max_violation=None):
        super().__init__(message)
        self.max_violation = max_violation


class SingularConstraintError(RuntimeError):
    """The multiplier system is numerically singular.

    Raised when the constraint Gram matrix has condition number above
    1e12 (coincident agents or linearly dependent constraint rows).
    ``step_index`` is set when the failure happens mid-simulation.
    """

    def __init__(self, message, condition_number=None, step_index=None):
        super().__init__(message)
        self.condition_number = condition_number
        self.step_index = step_index
