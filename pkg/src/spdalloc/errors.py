"""Exception hierarchy shared across the package.

Every error raised on purpose derives from SpdallocError so callers (and the
CLI) can distinguish usage/format problems (exit code 2) from resource-limit
refusals (exit code 3).
"""

from __future__ import annotations


class SpdallocError(Exception):
    """Base class for all errors raised by spdalloc."""


# --- graph construction / validation -------------------------------------

class GraphError(SpdallocError):
    pass


class CycleDetected(GraphError):
    """The task graph contains a directed cycle; names one offending edge."""


class DuplicateNode(GraphError):
    pass


class NonPositiveNodeWeight(GraphError):
    pass


class NegativeEdgeWeight(GraphError):
    pass


class UnknownTask(GraphError):
    pass


class UnknownEdge(GraphError):
    pass


class AllocationMismatch(GraphError):
    """An allocation does not cover the graph or uses an invalid resource."""


# --- tree composition / parsing -------------------------------------------

class TreeError(SpdallocError):
    pass


class IdCollision(TreeError):
    """Serial/parallel composition would merge graphs with a shared task id."""


class DuplicateLeafId(TreeError):
    pass


class TreeSyntaxError(TreeError):
    """Tree text could not be parsed; carries 1-based line/column."""

    def __init__(self, message: str, line: int, col: int):
        super().__init__(f"{message} (line {line}, column {col})")
        self.line = line
        self.col = col


# --- solving ----------------------------------------------------------------

class ZeroShare(SpdallocError):
    """A cost evaluation received a missing or non-positive share."""


class MismatchedReport(SpdallocError):
    """A solve report does not belong to the given tree/capacity."""


# --- instance generation -----------------------------------------------------

class BadN(SpdallocError):
    """Instance size violates the family's divisibility/minimum rules."""


class BadParams(SpdallocError):
    pass


# --- resource limits (CLI exit code 3) ---------------------------------------

class ResourceLimit(SpdallocError):
    pass


class InstanceTooLarge(ResourceLimit):
    """Exhaustive search refused: instance exceeds the configured size cap."""


class TooManyPaths(ResourceLimit):
    """Path enumeration refused: graph has more source-sink paths than the cap."""


# --- i/o ----------------------------------------------------------------------

class FormatMismatch(SpdallocError):
    """Input payload has the wrong shape for the requested operation."""
