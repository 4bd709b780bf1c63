"""Exception and warning types raised by the package."""


class DomainError(ValueError):
    """An argument lies outside the mathematical domain of a function."""


class ConvergenceError(RuntimeError):
    """A series, root finder or quadrature failed to reach its tolerance."""


class UnsupportedModelError(TypeError):
    """The requested operation is not available for this FPT model."""


class SimulationBudgetError(RuntimeError):
    """A path simulation hit its configured internal-time budget."""


class DivergenceWarning(RuntimeWarning):
    """An integral that was requested is infinite."""
