"""Exception and warning types raised across the package."""


class QFragilityError(Exception):
    """Base class for all errors raised by qfragility."""


class NotSquare(QFragilityError, ValueError):
    pass


class NotHermitian(QFragilityError, ValueError):
    pass


class NotUnitTrace(QFragilityError, ValueError):
    pass


class NotPSD(QFragilityError, ValueError):
    pass


class NotNormalized(QFragilityError, ValueError):
    pass


class DimensionMismatch(QFragilityError, ValueError):
    pass


class ConvergenceFailure(QFragilityError, RuntimeError):
    pass


class InvalidPOVM(QFragilityError, ValueError):
    pass


class SingularProbability(QFragilityError, ArithmeticError):
    """An outcome has vanishing probability but a non-vanishing derivative."""


class QuadratureNotConverged(QFragilityError, RuntimeError):
    pass


class InsufficientMembers(QFragilityError, ValueError):
    pass


class BadSpec(QFragilityError, ValueError):
    pass


class FileParseError(QFragilityError, ValueError):
    pass


class ApproximationRegimeViolated(UserWarning):
    """The noise width is outside the regime where second-order expansions hold."""


class DegenerateY(UserWarning):
    """Yu's Y operator has a degenerate spectrum; its eigenbasis is not unique."""
