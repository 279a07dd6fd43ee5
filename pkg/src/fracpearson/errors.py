"""Exception and warning types raised by fracpearson."""


class FracPearsonError(Exception):
    """Base class for all errors raised by this package."""


class DomainError(FracPearsonError, ValueError):
    """An argument lies outside the domain of the operation."""


class NonConvergence(FracPearsonError, ArithmeticError):
    """A series or iterative scheme did not reach its tolerance."""


class InversionUnstable(FracPearsonError, ArithmeticError):
    """The two Laplace inversion routes disagree, or the request is out of range."""


class UnsupportedClass(FracPearsonError, ValueError):
    """The Pearson model has a continuous spectrum and is not handled."""


class QuadratureFailure(FracPearsonError, ArithmeticError):
    """Adaptive quadrature hit its refinement limit before the tolerance."""


class HorizonTooShort(FracPearsonError, RuntimeError):
    """A subordinator path never exceeded one of the observation times."""


class DegenerateVariance(FracPearsonError, ArithmeticError):
    """A sample variance is (numerically) zero."""


class DegenerateLeadingTerm(RuntimeWarning):
    """The leading asymptotic coefficient vanishes (pole of 1/Gamma)."""
