"""Exception hierarchy shared by all modules."""


class FloquetPIError(Exception):
    """Base class for every error raised by this package."""


class HermiticityViolation(FloquetPIError, ValueError):
    pass


class DimensionMismatch(FloquetPIError, ValueError):
    pass


class NormViolation(FloquetPIError, ValueError):
    pass


class NotUnitary(FloquetPIError, ValueError):
    pass


class StepLimitExceeded(FloquetPIError, RuntimeError):
    pass


class DegenerateEigenvectors(FloquetPIError, ValueError):
    pass


class ParallelVectors(FloquetPIError, ValueError):
    pass


class DomainError(FloquetPIError, ValueError):
    pass


class NoCarrier(FloquetPIError, ValueError):
    pass


class FrameMatchFailure(FloquetPIError, RuntimeError):
    pass


class ConfigError(FloquetPIError, ValueError):
    pass


class BudgetExhausted(FloquetPIError, RuntimeError):
    """Raised when the optimizer runs out of evaluations.

    The best point found so far is kept on the exception so callers can
    still use it.
    """

    def __init__(self, message, result=None):
        super().__init__(message)
        self.result = result
