"""Exception hierarchy shared by all modules.

The CLI maps :class:`DomainError` to exit code 3 and
:class:`NumericalError` to exit code 4.
"""


class LFScatterError(Exception):
    """Base class for package errors."""


class DomainError(LFScatterError, ValueError):
    """Input outside the domain of an operation."""


class ConsistencyError(LFScatterError, RuntimeError):
    """Internal bookkeeping produced an impossible state."""


class NumericalError(LFScatterError, ArithmeticError):
    """A numerical procedure could not produce a trustworthy result."""


class BranchCutError(NumericalError):
    """Unitary has an eigenvalue on the branch cut of the principal logarithm."""


class FitFailure(NumericalError):
    """Cluster-operator fit stayed inconsistent after full escalation."""


class DegenerateStateError(NumericalError):
    """Prepared state vanished (norm below threshold)."""
