"""Exception types shared across the package."""


class SkewfatouError(Exception):
    """Base class for all package-specific errors."""


class MalformedSpec(SkewfatouError):
    """Map-spec document is syntactically invalid."""


class DegreeMismatch(SkewfatouError):
    """Degree of p or q is inconsistent with the declared d."""


class NotMonic(SkewfatouError):
    """Leading coefficient of p, or the w^d coefficient of q, is not exactly 1."""


class DegreeTooLow(SkewfatouError):
    """d < 2 has no interesting dynamics and is rejected."""


class NoConvergence(SkewfatouError):
    """Simultaneous root iteration hit its cap; carries best residuals."""

    def __init__(self, message, roots=None, residuals=None):
        super().__init__(message)
        self.roots = roots
        self.residuals = residuals


class AmbientMismatch(SkewfatouError):
    """Distance query between point clouds living in different ambients."""


class PeriodTooLarge(SkewfatouError):
    """Symbolic fiber return map would exceed the coefficient cap."""


class BoundaryTooClose(SkewfatouError):
    """Region boundary is too close to the Julia cloud for quadrature."""


class HypothesisUnmet(SkewfatouError):
    """The reduced linking formula's fiber-connectivity hypothesis failed."""


class PieceNotSeparable(SkewfatouError):
    """Inverse-branch piece cannot be enclosed with positive margin."""


class InsufficientDepth(SkewfatouError):
    """Fewer than three certified linking values; no certificate."""


class UnknownExample(SkewfatouError):
    """Requested gallery example does not exist."""
