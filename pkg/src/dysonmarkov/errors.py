"""Exception hierarchy.

Every error raised on purpose by the package derives from :class:`DysonError`.
The CLI maps :class:`ConfigError` subclasses to exit code 2 and every other
:class:`DysonError` to exit code 3.
"""


class DysonError(Exception):
    """Base class for all package errors."""


class ConfigError(DysonError, ValueError):
    """Configuration could not be used."""


class ParseError(ConfigError):
    """Malformed configuration document."""


class ValidationError(ConfigError):
    """Configuration is well-formed but inconsistent.

    ``fields`` lists the dotted paths of the offending entries.
    """

    def __init__(self, message, fields=()):
        super().__init__(message)
        self.fields = tuple(fields)


class InvalidParameter(DysonError, ValueError):
    pass


class NotSquare(InvalidParameter):
    pass


class NegativeEntry(InvalidParameter):
    pass


class RowSumViolation(InvalidParameter):
    pass


class IndexOutOfRange(InvalidParameter, IndexError):
    pass


class EmptyList(InvalidParameter):
    pass


class NonFiniteAxis(InvalidParameter):
    pass


class NotHermitian(InvalidParameter):
    pass


class DimensionMismatch(InvalidParameter):
    pass


class LengthMismatch(DimensionMismatch):
    pass


class SingularResolvent(DysonError, ArithmeticError):
    """(I - c*delta*A) is too ill-conditioned; delta is too large."""


class SingularSystem(DysonError, ArithmeticError):
    pass


class AcausalInput(InvalidParameter):
    """A free propagator block connecting a later time to an earlier one is nonzero."""


class NonPhysicalState(DysonError, ValueError):
    pass


class ZeroSigma(DysonError, ValueError):
    pass


class GridMismatch(DysonError, ValueError):
    pass
