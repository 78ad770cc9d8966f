"""Exception hierarchy shared by all conelyap modules."""


class ConelyapError(Exception):
    """Base class for every error raised by this package."""


class DimensionError(ConelyapError, ValueError):
    """Operands have incompatible shapes."""


class ContractError(ConelyapError, ValueError):
    """A documented precondition of an operation does not hold."""


class NumericalFailure(ConelyapError, ArithmeticError):
    """A floating-point kernel did not converge.

    ``partial`` carries whatever the kernel had computed before giving up.
    """

    def __init__(self, message, partial=None):
        super().__init__(message)
        self.partial = partial


class RangeError(ConelyapError, OverflowError):
    """Input lies outside the range where the accuracy contract holds."""


class ConsistencyError(ConelyapError, RuntimeError):
    """Two independent computations that must agree did not."""


class ParameterError(ConelyapError, KeyError):
    """A coupling template refers to a parameter that has no value."""

    def __str__(self):
        return str(self.args[0]) if self.args else "unbound parameter"


class ParseError(ConelyapError):
    """Problem or schedule file is malformed.

    ``context`` locates the offending field (``systems[0].matrix[1][2]``)
    or the line/column of a JSON syntax error.
    """

    def __init__(self, message, context=None):
        self.context = context
        super().__init__(f"{context}: {message}" if context else message)
