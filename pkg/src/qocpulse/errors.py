"""Exception classes raised across the package.

Every error derives from :class:`QocError` so the command-line front end can
report them uniformly; the class name is what ends up on stderr.
"""


class QocError(Exception):
    """Base class for all package errors."""

    exit_code = 1


class NonHermitian(QocError, ValueError):
    pass


class NoConvergence(QocError, ArithmeticError):
    pass


class DimensionMismatch(QocError, ValueError):
    pass


class ParseError(QocError, ValueError):
    pass


class ValidationError(QocError, ValueError):
    pass


class MissingAnharmonicity(ValidationError):
    pass


class NonPhysicalT2(ValidationError):
    pass


class ZeroDetuning(ValidationError):
    pass


class BadShapeParams(QocError, ValueError):
    pass


class LabelMismatch(QocError, ValueError):
    pass


class OpenSystemExactGradientUnsupported(QocError, NotImplementedError):
    pass


class NaNCost(QocError, FloatingPointError):
    pass


class LineSearchFailure(UserWarning):
    """Issued (not raised) when L-BFGS-B gives up in the line search."""


class FitDivergence(QocError, RuntimeError):
    """The survival-curve fit failed; the raw curves are kept on the error."""

    def __init__(self, msg, lengths=None, curves=None):
        super().__init__(msg)
        self.lengths = lengths
        self.curves = curves or {}


class InsufficientLengths(QocError, ValueError):
    pass


class UnmappedChannel(QocError, KeyError):
    def __str__(self):
        return str(self.args[0]) if self.args else ""


class UsageError(QocError):
    exit_code = 2
