"""Exception hierarchy.

Every error raised on purpose by the package derives from
:class:`ContracertError`. :class:`VerificationError` is special: it means a
numerical check contradicted a result that should hold, and the CLI maps it
to exit code 2 instead of 1.
"""


class ContracertError(Exception):
    """Base class for domain errors."""


class DimensionMismatch(ContracertError, ValueError):
    pass


class NonConvergence(ContracertError, ArithmeticError):
    pass


class SingularWeight(ContracertError, ValueError):
    pass


class NotSymmetric(ContracertError, ValueError):
    pass


class NotPositiveDefinite(ContracertError, ValueError):
    pass


class UnsupportedDimension(ContracertError, ValueError):
    pass


class DomainError(ContracertError, ValueError):
    pass


class SingularW(ContracertError, ValueError):
    """W has a nontrivial kernel where an invertible W is required."""


class NoKernel(ContracertError, ValueError):
    pass


class TooManyVertices(ContracertError, ValueError):
    pass


class DegenerateRate(ContracertError, ValueError):
    """No contraction claim can be made (spectral abscissa too large)."""


class NotHurwitz(ContracertError, ValueError):
    pass


class UnsupportedActivation(ContracertError, ValueError):
    pass


class NonFiniteState(ContracertError, ArithmeticError):
    pass


class HorizonExceeded(ContracertError, RuntimeError):
    pass


class OutOfBox(ContracertError, ValueError):
    pass


class TooLarge(ContracertError, ValueError):
    pass


class NoKktPoint(ContracertError, RuntimeError):
    pass


class ParseError(ContracertError, ValueError):
    pass


class VerificationError(ContracertError):
    """A numerical result contradicts a guarantee the package relies on."""
