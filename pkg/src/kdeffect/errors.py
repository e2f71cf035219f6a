"""Exception types raised by kdeffect."""


class KDError(Exception):
    """Base class for all kdeffect errors."""


class InvalidParameterError(KDError, ValueError):
    pass


class DegenerateSystemError(KDError):
    """The scaled system cannot be built (e.g. zero potential strength)."""


class NumericOverflowError(KDError, FloatingPointError):
    pass


class ScanError(KDError):
    """The energy scan produced an inconsistent set of brackets."""


class InvalidBracketError(KDError, ValueError):
    pass


class SpectrumOrderError(KDError):
    """An assembled eigenfunction does not carry the node count of its index."""


class FitError(KDError):
    pass


class GridMismatchError(KDError, ValueError):
    pass


class UnderResolvedError(KDError, ValueError):
    pass


class InsufficientPatternError(KDError):
    pass


class ConfigError(KDError, ValueError):
    """Invalid run configuration. ``key`` names the offending dotted key."""

    def __init__(self, key, message):
        self.key = key
        super().__init__(f"{key}: {message}")
