"""Exception types raised across the package."""


class GFLCError(ValueError):
    """Base class for all domain errors raised by gflc."""


class SchemaError(GFLCError):
    pass


class ParseError(GFLCError):
    pass


class DomainError(GFLCError):
    pass


class ConfigError(GFLCError):
    pass


class ShapeError(GFLCError):
    pass


class ConsistencyError(GFLCError):
    pass


class DegenerateLabelsError(GFLCError):
    """Raised when a quantity needs both classes but only one is present."""
