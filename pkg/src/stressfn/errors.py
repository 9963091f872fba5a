"""Exception types shared across the package."""


class StressfnError(Exception):
    """Base class for package errors."""


class UnsupportedOrderError(StressfnError):
    """Jet order above 4 or more than 2 input variables."""


class SingularityError(StressfnError):
    """Division by a jet with zero value, or log of a non-positive one."""


class InvalidArchitectureError(StressfnError):
    """Network widths that cannot form a valid layer stack."""


class InvalidInputError(StressfnError):
    """Input shape or jet metadata incompatible with the operation."""


class InvalidConfigError(StressfnError):
    """Run configuration that violates a precondition."""


class DivergedTrainingError(StressfnError):
    """Non-finite gradient or loss during optimization."""

    def __init__(self, message, iteration=None):
        super().__init__(message)
        self.iteration = iteration


class DivergedEvaluationError(StressfnError):
    """Non-finite value produced while evaluating a functional."""


class DegenerateSolutionError(StressfnError):
    """Trained field too close to zero for the torque rescaling to make sense."""
