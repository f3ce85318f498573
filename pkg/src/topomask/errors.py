"""Exception hierarchy shared across the package."""


class TopomaskError(Exception):
    """Base class for all package errors."""


class FormatError(TopomaskError, ValueError):
    """Malformed or unsupported NRRD header."""

    def __init__(self, field, message=None):
        self.field = field
        super().__init__(message or f"unsupported or missing NRRD field: {field!r}")


class TruncationError(TopomaskError, ValueError):
    """NRRD payload size does not match the header."""


class WriteError(TopomaskError, OSError):
    pass


class EmptyForegroundError(TopomaskError, ValueError):
    pass


class EmptyMaskError(TopomaskError, ValueError):
    pass


class ParameterError(TopomaskError, ValueError):
    pass


class ShapeError(TopomaskError, ValueError):
    pass


class GeometryError(TopomaskError, ValueError):
    pass


class UnsupportedDimensionError(TopomaskError, ValueError):
    pass


class UndefinedMetricError(TopomaskError, ValueError):
    pass


class ConfigError(TopomaskError, ValueError):
    def __init__(self, field, message=None):
        self.field = field
        super().__init__(message or f"invalid or missing config field: {field!r}")


class InvariantError(TopomaskError, RuntimeError):
    """Internal consistency check failed; indicates a bug."""
