"""Exception types shared across the package.

Every rejection of bad input raises a subclass of :class:`DomainError`,
so callers (and the CLI) can separate domain failures from bugs.
"""

from __future__ import annotations


class DomainError(Exception):
    """Base class for all input and state rejections raised by this package."""


class ShapeMismatch(DomainError):
    """Array dimensions disagree with each other or with a declared layout."""


class NonFiniteValue(DomainError):
    """A covariate, outcome, grid location, or prediction is NaN or infinite."""


class EmptyArm(DomainError):
    """A declared arm has no units."""


class TooFewUnits(DomainError):
    """Fewer units than the operation can split or estimate from."""


class UnsortedGrid(DomainError):
    """Evaluation locations are not strictly increasing."""


class DuplicateLocation(DomainError):
    """Two requested evaluation locations collide."""


class GridTooSmall(DomainError):
    """The operation needs more locations than the grid provides."""


class SameArm(DomainError):
    """A contrast was requested between an arm and itself."""


class EmptyTrainingArm(DomainError):
    """A cross-fitting training split contains too few units of the target arm."""


class SingularDesign(DomainError):
    """The linear system of the ridge solve is singular at the given penalty."""


class NonFiniteGradient(DomainError):
    """A gradient produced by backpropagation is NaN or infinite."""


class ZeroBaselineSE(DomainError):
    """A standard-error ratio was requested against a zero baseline."""


class DegenerateDraws(DomainError):
    """All bootstrap draws are identical although the influence values are not zero."""


class MissingColumn(DomainError):
    """A named CSV column is absent from the header."""


class ParseError(DomainError):
    """A CSV cell failed to parse; carries 1-based row and column indices."""

    def __init__(self, message: str, row: int | None = None, column: str | None = None):
        super().__init__(message)
        self.row = row
        self.column = column
