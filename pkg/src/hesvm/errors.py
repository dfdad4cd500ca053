"""Exception hierarchy shared by every layer of the package."""


class HesvmError(Exception):
    """Base class for all package errors."""


class InvalidParams(HesvmError, ValueError):
    """Structurally invalid encryption parameters."""


class SecurityBudgetExceeded(HesvmError, ValueError):
    """The modulus chain is too large for the ring dimension at the requested security level."""


class DomainError(HesvmError, ValueError):
    """A ring element is in the wrong representation (coefficient vs. NTT)."""


class LevelMismatch(HesvmError, ValueError):
    pass


class ScaleMismatch(HesvmError, ValueError):
    pass


class OutOfLevels(HesvmError):
    """The modulus chain is exhausted; no further rescaling is possible."""


class TooManySlots(HesvmError, ValueError):
    pass


class NoRelinKey(HesvmError, KeyError):
    pass


class NoRotationKey(HesvmError, KeyError):
    pass


class SerializationError(HesvmError, ValueError):
    pass


class DegenerateData(HesvmError, ValueError):
    """Training data that cannot produce a meaningful classifier."""


class MalformedRow(HesvmError, ValueError):
    pass


class UnknownLabel(HesvmError, ValueError):
    pass


class ZeroVariance(DegenerateData):
    pass


class MissingFile(HesvmError, FileNotFoundError):
    pass
