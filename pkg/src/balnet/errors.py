"""Exception types shared across the toolkit."""


class BalnetError(Exception):
    """Base class for all toolkit errors."""


class SingularProjection(BalnetError):
    """det(Q) <= 1/2: too few neurons or a degenerate position layout."""


class DimensionMismatch(BalnetError):
    pass


class NonPositiveVariance(BalnetError):
    """Variance at or below the 1e-12 floor; degenerate laws are rejected."""


class NegativeVariance(BalnetError):
    pass


class EigenFailure(BalnetError):
    """Eigenvalue iteration did not converge within its budget."""


class NoConvergence(BalnetError):
    """Newton iteration exhausted (max iterations or step underflow)."""


class UnstableRoot(BalnetError):
    """A balance root was found but its Jacobian is not strictly stable.

    Carries the diagnostic report (root, margin) in ``self.report``.
    """

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class SingularJacobian(BalnetError):
    """|det J| below the 1e-12 guard; implicit mean dynamics undefined."""


class InvalidInitialState(BalnetError):
    pass


class BlowUp(BalnetError):
    """State magnitude exceeded the 1e6 guard; expected off the balanced set.

    Carries the simulation time, offending population/index, and whatever
    observable series was recorded before the abort (``self.partial``).
    """

    def __init__(self, message, time=None, population=None, index=None, partial=None):
        super().__init__(message)
        self.time = time
        self.population = population
        self.index = index
        self.partial = partial


class EmptySample(BalnetError):
    pass


class GridMismatch(BalnetError):
    pass


class TooFewSamples(BalnetError):
    pass


class NonGaussianLimit(BalnetError):
    """Reserved: distance brackets are only implemented for Gaussian limits."""


class ParseError(BalnetError):
    def __init__(self, line, message):
        super().__init__("line %d: %s" % (line, message))
        self.line = line


class ValidationError(BalnetError):
    pass
