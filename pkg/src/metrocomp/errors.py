"""Exception taxonomy shared by the library and the CLI exit codes."""


class MetrocompError(Exception):
    """Base class for all library errors."""


class ValidationError(MetrocompError):
    """Input violates a documented invariant (bad matrix, bad config, ...)."""


class DimensionMismatchError(ValidationError):
    """Operators or states of incompatible dimensions were combined."""


class NumericalFailureError(MetrocompError):
    """A computation produced non-finite or otherwise unusable numbers."""


class UnsaturableDirectionError(MetrocompError):
    """A derivative leaks outside the support of the state.

    Signals a divergent / ill-posed quantum Fisher information direction.
    """


class UnidentifiableParametersError(MetrocompError):
    """The (quantum) Fisher matrix is singular: some parameter combination
    cannot be estimated with finite variance."""


class InfeasibleConstraintsError(MetrocompError):
    """The local-unbiasedness constraints admit no solution (rank defect)."""
