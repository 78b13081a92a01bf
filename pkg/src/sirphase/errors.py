"""Exception types shared across the package."""


class ValidationError(ValueError):
    """A parameter record violates one of its invariants."""


class IntegrationError(RuntimeError):
    """Base class for numerical failures of the ODE solver.

    ``t`` is the model time (years) at which the solver gave up.
    """

    def __init__(self, message: str, t: float):
        super().__init__(f"{message} at t = {t:.17g}")
        self.t = t


class StepSizeUnderflow(IntegrationError):
    pass


class NonFiniteState(IntegrationError):
    pass
