"""Exception types shared across the library and the command line."""


class DisconetError(Exception):
    """Base class for every error raised by this package."""


class DimensionError(DisconetError, ValueError):
    """Operand shapes or lengths do not conform."""


class ParameterError(DisconetError, ValueError):
    """A numeric parameter is outside its documented range."""


class ContractError(DisconetError, ValueError):
    """A call violates a documented precondition."""


class EstimatorError(DisconetError, ValueError):
    """Too few candidates or samples for the requested estimate."""


class NumericError(DisconetError, ArithmeticError):
    """A computation produced or encountered a non-finite value."""


class ParseError(DisconetError, ValueError):
    """A data or checkpoint file could not be parsed; messages carry line numbers."""


class SchemaError(DisconetError, ValueError):
    """A data file row has the wrong arity for the declared dimensions."""


class ConfigError(DisconetError, ValueError):
    """An experiment config is missing, malformed, or carries unknown keys."""
