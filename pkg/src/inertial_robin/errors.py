"""Exception types raised by the package."""


class InvalidArgument(ValueError):
    pass


class InvalidCoefficient(ValueError):
    pass


class InterfaceMismatch(ValueError):
    pass


class SolverFailure(RuntimeError):
    """Raised when a linear solve misses its residual bound."""

    def __init__(self, message, residual):
        super().__init__(f"{message} (relative residual {residual:.3e})")
        self.residual = residual
