"""Exception hierarchy shared by all bellscope modules."""


class BellscopeError(Exception):
    """Base class for every error raised by the package."""


class InvalidScenarioError(BellscopeError, ValueError):
    pass


class InvalidVectorError(BellscopeError, ValueError):
    pass


class CapExceededError(BellscopeError):
    """Raised when a vertex enumeration would exceed the 2**20 cap."""


class ModeMismatchError(BellscopeError, TypeError):
    """Exact and float arithmetic were mixed in one operation."""


class NotIndependenceVectorError(BellscopeError, ValueError):
    pass


class OutsidePolytopeError(BellscopeError):
    def __init__(self, message, certificate=None):
        super().__init__(message)
        self.certificate = certificate


class InadmissibleError(BellscopeError):
    pass


class InfeasibleError(BellscopeError):
    pass


class ReconstructionError(BellscopeError):
    """A constructed object failed to reproduce its target numbers."""


class ZeroProbabilityError(BellscopeError, ZeroDivisionError):
    pass


class NotAPartitionError(BellscopeError, ValueError):
    pass


class SignalingError(BellscopeError):
    pass


class ScreeningError(BellscopeError):
    pass


class NonDeterministicError(BellscopeError, ValueError):
    pass


class UnsupportedScenarioError(BellscopeError):
    pass


class QuantumValidationError(BellscopeError, ValueError):
    """A matrix failed a Hermitian / projection / density / norm check."""


class DimensionError(BellscopeError, ValueError):
    pass
