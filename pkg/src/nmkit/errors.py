"""Exception hierarchy.

The three branches map onto the CLI exit codes: ``ValidationError`` (bad
inputs, exit 2), ``NumericError`` (a computation could not be completed,
exit 3) and ``InvariantViolation`` (an internal consistency check failed,
exit 4).
"""


class NMKitError(Exception):
    """Base class for all nmkit errors."""


class ValidationError(NMKitError):
    """Input violates a precondition or schema."""


class NonSquare(ValidationError):
    """Matrix is not square where a square one is required."""


class NotHermitian(ValidationError):
    """Matrix deviates from Hermiticity beyond the accepted tolerance."""


class DimMismatch(ValidationError):
    """Operands have incompatible dimensions."""


class InvalidState(ValidationError):
    """Matrix fails the density-matrix invariants (trace, Hermiticity, positivity)."""


class UnphysicalG(ValidationError):
    """Decay amplitude with |G| > 1; the resulting map would not be a channel."""


class NegativeTime(ValidationError):
    """Negative time where t >= 0 is required."""


class GridTooCoarse(ValidationError):
    """Integration step too large to resolve the kernel's correlation time."""


class NotTracePreserving(ValidationError):
    """Superoperator violates trace preservation beyond tolerance."""


class NumericError(NMKitError):
    """A numerical routine failed."""


class ConvergenceFailure(NumericError):
    """Eigensolver did not converge."""


class Singular(NumericError):
    """Linear map is (numerically) singular and cannot be inverted."""


class InvariantViolation(NMKitError):
    """An internal invariant that must hold by construction was violated."""
