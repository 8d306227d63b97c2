"""Exception hierarchy shared by all sacd modules."""


class SacdError(Exception):
    """Base class for every error raised by this package."""


class SelectionError(SacdError, IndexError):
    pass


class DimensionError(SacdError, ValueError):
    pass


class NumericalError(SacdError, ArithmeticError):
    pass


class ConfigurationError(SacdError, ValueError):
    pass


class ContractError(SacdError, ValueError):
    pass


class ProtocolError(SacdError, RuntimeError):
    """A collective was called with inconsistent contributions."""


class ParseError(SacdError, ValueError):
    def __init__(self, message, lineno=None):
        self.lineno = lineno
        if lineno is not None:
            message = f"line {lineno}: {message}"
        super().__init__(message)
