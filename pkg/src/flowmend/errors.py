"""Exception types shared across the package."""

from __future__ import annotations


class FlowmendError(Exception):
    """Base class for all flowmend errors."""


class DimensionMismatch(FlowmendError):
    """A vector or matrix does not have the expected shape."""


class DegenerateNetwork(FlowmendError):
    """The network has no free flow dimension (link count <= node count)."""


class RankDeficient(FlowmendError):
    """The incidence matrix is not of full row rank.

    Happens e.g. when a group of internal nodes forms an island with no
    boundary link, so their conservation equations are linearly dependent.
    """

    def __init__(self, expected: int, actual: int):
        self.expected = expected
        self.actual = actual
        super().__init__(f"incidence matrix has rank {actual}, expected full row rank {expected}")


class NoBaseSet(FlowmendError):
    """No base set exists within the candidate links.

    The monitored flows then do not determine the remaining flows: the
    problem is unobservable and no correction can be computed.
    """


class SingularComplement(FlowmendError):
    """The complement columns of a base set failed to factor (internal error)."""


class SingularMatrix(FlowmendError):
    """A square solve hit a pivot below tolerance."""

    def __init__(self, pivot: float):
        self.pivot = pivot
        super().__init__(f"matrix is singular to working precision (pivot {pivot:.3e})")


class NotFullColumnRank(FlowmendError):
    """The restricted kernel basis has dependent columns; the normal matrix is singular."""


class OracleTooLarge(FlowmendError):
    """The exact oracle was asked for an instance beyond its size cap."""


class DegenerateDirection(FlowmendError):
    """The recoverability quotient is undefined for this direction (zero denominator)."""


class DegenerateSubset(FlowmendError):
    """Every kernel direction vanishes on the queried subset; the quotient is vacuous."""


class InvalidAlpha(FlowmendError):
    """The stability bound requires a recoverability value strictly greater than 1."""


class InfeasibleSpec(FlowmendError):
    """A synthetic-instance specification cannot be realised."""


class MissingGroundTruth(FlowmendError):
    """Validation was requested but no usable ground-truth sidecar was supplied."""


# ---------------------------------------------------------------------------
# Parse-level rejections of network documents.


class NetworkFormatError(FlowmendError):
    """A network document violates the file grammar or a model invariant."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class FormatSyntaxError(NetworkFormatError):
    """The document is not well-formed under the versioned grammar."""


class UnknownNode(NetworkFormatError):
    """A link endpoint names a node that is not declared."""


class UnknownLink(NetworkFormatError):
    """A monitored/observed entry names a link that is not declared."""


class DuplicateId(NetworkFormatError):
    """A node or link identifier appears more than once."""


class NegativeCount(NetworkFormatError):
    """An observed count is negative; cumulative counts cannot be."""


class UnmonitoredObservation(NetworkFormatError):
    """An observation is given for a link outside the monitored set."""


class MissingObservation(NetworkFormatError):
    """A monitored link has no observed count."""
