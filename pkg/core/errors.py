"""Exception hierarchy for strip code computations"""


class StripCodeError(Exception):
    """Base class for every error raised by the solver"""


class InvalidArgumentError(StripCodeError, ValueError):
    """A query or value violates its documented preconditions"""


class ConfigError(StripCodeError, ValueError):
    """Invalid run configuration"""


class ResourceLimitError(StripCodeError):
    """A configured memory or search cap would be exceeded"""

    def __init__(self, message: str, cap: int):
        super().__init__(f"{message} (cap: {cap})")
        self.cap = cap


class MatrixOverflowError(StripCodeError, OverflowError):
    """A finite min-plus entry reached the infinity sentinel"""


class PowerStoreError(StripCodeError, OSError):
    """The power store could not be read or written"""


class StabilityNotFoundError(StripCodeError):
    """No pseudo-period was found below the exponent cap"""

    def __init__(self, cap: int):
        super().__init__(f"no pseudo-period found within the exponent cap of {cap}")
        self.cap = cap


class ConsistencyError(StripCodeError):
    """Two independent computations disagree; indicates a bug"""
