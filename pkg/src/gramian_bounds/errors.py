"""Exception taxonomy shared across the package.

Every error that a public operation can raise is a subclass of
GramianBoundsError, so CLI code can map any failure to a single
machine-readable error record.
"""


class GramianBoundsError(Exception):
    """Base class for all package errors."""

    kind = "Error"


class NotHermitian(GramianBoundsError):
    kind = "NotHermitian"


class NoConvergence(GramianBoundsError):
    kind = "NoConvergence"


class Singular(GramianBoundsError):
    kind = "Singular"


class Defective(GramianBoundsError):
    kind = "Defective"


class InfeasibleSpec(GramianBoundsError):
    kind = "InfeasibleSpec"


class DimensionMismatch(GramianBoundsError):
    kind = "DimensionMismatch"


class Overflow(GramianBoundsError):
    kind = "Overflow"


class Unreachable(GramianBoundsError):
    kind = "Unreachable"


class HypothesisViolated(GramianBoundsError):
    kind = "HypothesisViolated"


class DeskScaleExceeded(GramianBoundsError):
    kind = "DeskScaleExceeded"


class DegenerateRegion(GramianBoundsError):
    kind = "DegenerateRegion"
