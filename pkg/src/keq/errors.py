"""Exception types shared across the toolkit."""


class KeqError(Exception):
    """Base class for all toolkit errors."""


class DomainError(KeqError):
    """An argument left the mathematical domain of an operation."""


class DegenerateInput(KeqError):
    """Moments too close to the saturated ball state to admit a statistic."""

    def __init__(self, message, gamma=None):
        super().__init__(message)
        self.gamma = gamma


class CondensationRegime(KeqError):
    """Temperature below the Bose-Einstein critical threshold."""


class RootBracketFailure(KeqError):
    """A monotone root solve could not bracket its target."""


class QuadratureError(KeqError):
    """Adaptive quadrature failed to converge within its depth budget."""


class BlowupError(KeqError):
    """A time integration produced values far outside the admissible range."""
