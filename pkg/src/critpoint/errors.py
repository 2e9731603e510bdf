"""Exception hierarchy shared by all solver modules."""


class CritpointError(Exception):
    """Base class for library errors."""


class InvalidParameterError(CritpointError, ValueError):
    """An argument is outside its admissible range."""


class DimensionError(CritpointError, ValueError):
    """A point does not match the objective dimension."""


class UnsupportedModeError(CritpointError, ValueError):
    """The requested Hessian oracle mode cannot be served by this objective."""


class ContractError(CritpointError, ValueError):
    """A solver precondition does not hold."""


class RegimeError(CritpointError, ValueError):
    """The accuracy target lies outside the regime where a bound applies."""


class NumericError(CritpointError, ArithmeticError):
    """Non-finite values or a non-converging numerical routine."""

    def __init__(self, message, trace=None, iterations=None):
        super().__init__(message)
        self.trace = trace
        self.iterations = iterations


class InvariantViolation(CritpointError, AssertionError):
    """A runtime-checked guarantee failed."""


class ConfigError(CritpointError, ValueError):
    """An experiment configuration is malformed."""


class CsvFormatError(CritpointError, ValueError):
    """A results CSV does not follow the expected schema."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line
