"""Exception hierarchy shared by all modules.

The CLI maps :class:`DomainError` (and subclasses) to exit code 2 and
:class:`NumericalError` / :class:`OverflowError` to exit code 3.
"""


class DomainError(ValueError):
    """A parameter lies outside the domain where an operation is defined."""


class RegimeError(DomainError):
    """The exponent tuple violates the regime hypothesis (e.g. alpha*p > n)."""


class PreconditionError(DomainError):
    """An input object fails a structural precondition.

    ``witness`` carries the offending object when one exists (for instance the
    dyadic cube at which a packing inequality fails).
    """

    def __init__(self, message, witness=None):
        super().__init__(message)
        self.witness = witness


class FitError(DomainError):
    """Too few usable scales for a least-squares dimension fit."""


class NumericalError(ArithmeticError):
    """A quadrature or iterative procedure did not reach its tolerance."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = dict(diagnostics or {})


class PrecisionError(NumericalError):
    """Evaluation tolerance too coarse for the requested probe scales."""
