"""Exception hierarchy shared by all modules."""


class ConsensusError(Exception):
    """Base class for every error raised by this package."""


class InvalidSizeError(ConsensusError, ValueError):
    pass


class GenerationFailureError(ConsensusError, RuntimeError):
    pass


class DisconnectedGraphError(ConsensusError, ValueError):
    """Raised where a connected topology is required (infinite diameter)."""


class ContractViolationError(ConsensusError, ValueError):
    pass


class InvalidNodeError(ConsensusError, IndexError):
    pass


class InvalidParameterError(ConsensusError, ValueError):
    pass


class DegenerateParametersError(InvalidParameterError):
    pass


class DomainError(ConsensusError, ValueError):
    """Input outside the numerically supported domain (e.g. lambda2 too close to 1)."""


class OutOfRangeError(ConsensusError, ValueError):
    pass


class InstabilityError(ConsensusError, ArithmeticError):
    """The iteration diverges: mixing parameter outside the stability range."""


class PrecisionLossError(ConsensusError, ArithmeticError):
    pass


class ConfigError(ConsensusError, ValueError):
    pass
