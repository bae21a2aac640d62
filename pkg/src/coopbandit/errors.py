"""Exception types shared across the package."""


class CoopBanditError(Exception):
    """Base class for all package errors."""


class ConfigError(CoopBanditError, ValueError):
    """Invalid instance, algorithm or experiment configuration.

    ``key`` is the dotted config path and ``line`` the 1-based source line
    when the error came from a parsed config file.
    """

    def __init__(self, message, key=None, line=None):
        self.key = key
        self.line = line
        where = []
        if key is not None:
            where.append(f"key '{key}'")
        if line is not None:
            where.append(f"line {line}")
        if where:
            message = f"{message} ({', '.join(where)})"
        super().__init__(message)


class AdversaryRangeViolation(CoopBanditError):
    """An adversary returned rewards outside [0, 1]."""


class InvariantViolation(CoopBanditError):
    """Internal algorithm state broke a structural invariant."""


class ShapeMismatch(CoopBanditError, ValueError):
    """Series or arrays that must align do not."""
