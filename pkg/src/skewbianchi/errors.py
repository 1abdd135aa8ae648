"""Exception hierarchy shared by the backends, the identity suite and the CLI."""


class SkewBianchiError(Exception):
    """Base class for every error raised by this package."""


class StructuralError(SkewBianchiError, ValueError):
    """Shapes, index pairings or symmetry declarations do not fit together."""


class DomainError(SkewBianchiError, ValueError):
    """A point is outside the region where a stencil can be evaluated."""


class NumericError(SkewBianchiError, ArithmeticError):
    """A numerical precondition failed (e.g. the metric is not positive definite)."""


class GeometryParseError(SkewBianchiError, ValueError):
    """A geometry document could not be parsed.

    ``location`` is a JSON-path-like string pointing at the offending field.
    """

    def __init__(self, message: str, location: str = "$"):
        super().__init__(f"{location}: {message}")
        self.location = location


class CapabilityError(SkewBianchiError):
    """The requested identity or mode is not available for this geometry."""


class InvariantViolation(SkewBianchiError, AssertionError):
    """A theorem-level implication failed; this points at an implementation bug."""
