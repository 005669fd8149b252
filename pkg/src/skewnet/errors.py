"""Exception hierarchy shared by all modules.

Every numerical failure carries an optional ``where`` payload (lattice
coordinates, step index, ...) so the CLI can report it.
"""

from __future__ import annotations


class SkewNetError(Exception):
    """Base class; ``where`` locates the failure when meaningful."""

    exit_code = 3

    def __init__(self, message: str = "", where=None):
        self.where = where
        if where is not None:
            message = f"{message} (at {where})"
        super().__init__(message)


class ValidationError(SkewNetError):
    exit_code = 2


class SignatureMismatch(SkewNetError):
    pass


class NotInvertible(SkewNetError):
    pass


class UnsupportedCliffordInverse(NotInvertible):
    pass


class NotEvolvable(SkewNetError):
    pass


class NotClosed(SkewNetError):
    pass


class MissingEdge(SkewNetError):
    pass


class FrameSingular(SkewNetError):
    pass


class Incompatible(SkewNetError):
    pass


class NotZeroFolded(SkewNetError):
    pass


class Degenerate(SkewNetError):
    pass


class ZeroPolynomial(SkewNetError):
    pass


class NotARoot(SkewNetError):
    pass


class NotIndependent(SkewNetError):
    pass


class DegenerateColumns(SkewNetError):
    pass


class FactorizationError(SkewNetError):
    pass


class AllZero(SkewNetError):
    pass


class OnSphere(SkewNetError):
    pass


class ZeroE(SkewNetError):
    pass


class IdentityMap(SkewNetError):
    pass


class DegenerateFixedPoints(SkewNetError):
    pass


class ZeroBhat(SkewNetError):
    pass


class PreconditionError(SkewNetError):
    exit_code = 2


class TooShort(SkewNetError):
    pass


class NearAntipodal(SkewNetError):
    pass


class DegenerateDet(SkewNetError):
    pass


class LabelConflict(SkewNetError):
    pass


class BranchFailure(SkewNetError):
    pass


class PatternViolation(SkewNetError):
    pass


class GradeViolation(SkewNetError):
    pass


class NotEmbeddable(SkewNetError):
    pass
