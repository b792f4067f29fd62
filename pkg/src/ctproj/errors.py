"""Exception types shared across the library."""


class CtprojError(Exception):
    """Base class for all library errors."""


class ConfigError(CtprojError, ValueError):
    """Invalid configuration document."""


class MissingKeyError(ConfigError):
    pass


class UnknownKeyError(ConfigError):
    pass


class InvalidValueError(ConfigError):
    pass


class ConflictingKeysError(ConfigError):
    pass


class UnsupportedGeometryError(CtprojError, ValueError):
    """Operation not defined for this geometry kind."""


class SpecMismatchError(CtprojError, ValueError):
    """Array shape/dtype/finiteness does not match the declared spec."""


class SizeMismatchError(CtprojError, ValueError):
    """Raw file length disagrees with the header."""


class MalformedHeaderError(CtprojError, ValueError):
    pass


class NonFiniteDataError(CtprojError, ValueError):
    pass


class LengthMismatchError(CtprojError, ValueError):
    pass


class IndexOutOfRangeError(CtprojError, IndexError):
    pass


class DivergenceDetectedError(CtprojError, RuntimeError):
    """Iterative solve diverged (cost increased repeatedly)."""
