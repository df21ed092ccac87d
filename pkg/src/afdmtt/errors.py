"""Exception hierarchy shared by all modules."""


class AfdmError(Exception):
    """Base class for every error raised by this package."""


class DimensionError(AfdmError, ValueError):
    pass


class RankError(AfdmError, ValueError):
    pass


class DegenerateInputError(AfdmError, ValueError):
    pass


class IdentifiabilityError(AfdmError, ValueError):
    """Raised when path parameters cannot be separated (repeated generators)."""


class LayoutError(AfdmError, ValueError):
    """Pilot/guard/data placement violates the frame layout."""


class SamplingError(AfdmError, RuntimeError):
    pass


class ConditioningError(AfdmError, ValueError):
    pass


class SingularGainError(AfdmError, ValueError):
    pass


class ContractError(AfdmError, ValueError):
    """Input violates a documented precondition (e.g. delay beyond the prefix)."""


class ConfigError(AfdmError, ValueError):
    def __init__(self, key, message):
        self.key = key
        super().__init__(f"{key}: {message}")
