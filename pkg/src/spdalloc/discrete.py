"""Discrete allocator: capped continuous shares rounded into resource blocks.

Shares from the capped solver are sorted decreasing and packed onto resources
in consecutive blocks; the block that starts at sorted position i holds
ceil(gamma * n**(2/c) / share_i) tasks.  If the pass would need more than c
resources, the tail is dumped onto the last resource and the report is
flagged, since the block bound (and with it the approximation guarantee) no
longer applies.
"""

from __future__ import annotations

from dataclasses import dataclass
import math

from .continuous import CappedResult, continuous_cost, solve_capped
from .errors import MismatchedReport, SpdallocError
from .graph import Allocation, hat_cost, streaming_cost
from .spd import SpdTree, expand, leaves

__all__ = [
    "DiscreteSolveReport",
    "ApproximationDiagnostics",
    "allocate",
    "approximation_diagnostics",
    "block_size",
    "pack",
]


@dataclass
class DiscreteSolveReport:
    allocation: Allocation
    shares_used: CappedResult
    group_boundaries: list[tuple[int, int, int]]  # (resource, start index, size)
    gamma: float
    resources_used: int
    overflow: bool


@dataclass
class ApproximationDiagnostics:
    d: float
    d_hat: float
    delta: float
    ratio_d: float
    ratio_hat: float
    bound: float
    per_task_ok: bool | None  # None when the overflow fallback fired
    overflow: bool


def block_size(n: int, c: int, gamma: float, share: float) -> int:
    return math.ceil(gamma * n ** (2.0 / c) / share)


def pack(
    order: list[str],
    shares: dict[str, float],
    c: int,
    gamma: float,
    groups: list[list[str]] | None = None,
) -> tuple[dict[str, int], list[tuple[int, int, int]], bool]:
    """Assign tasks in the given sorted order to consecutive resource blocks.

    ``groups`` are collocation constraints: when the first member of a group
    is placed, the whole group lands on that resource and the block counter
    advances by the group size.  Returns (assignment, boundaries, overflow).
    """
    n = len(order)
    group_of: dict[str, list[str]] = {}
    if groups:
        for members in groups:
            for v in members:
                group_of[v] = members
    assignment: dict[str, int] = {}
    boundaries: list[tuple[int, int, int]] = []
    r = 1
    i = 0
    while i < n:
        if assignment.get(order[i]) is not None:
            i += 1
            continue
        if r > c:
            # Overflow fallback: everything left lands on the last resource.
            start = i
            placed = 0
            for v in order[i:]:
                if v not in assignment:
                    assignment[v] = c
                    placed += 1
            boundaries.append((c, start, placed))
            return assignment, boundaries, True
        limit = block_size(n, c, gamma, shares[order[i]])
        start = i
        filled = 0
        placed = 0
        while i < n and filled < limit:
            v = order[i]
            i += 1
            if v in assignment:
                continue
            for member in group_of.get(v, (v,)):
                assignment[member] = r
                placed += 1
            filled += len(group_of.get(v, (v,)))
        boundaries.append((r, start, placed))
        r += 1
    return assignment, boundaries, False


def allocate(t: SpdTree, c: int, gamma: float = 2.0) -> DiscreteSolveReport:
    """Pack the capped continuous shares into at most c resource blocks."""
    if c < 1:
        raise SpdallocError(f"resource count must be >= 1, got {c}")
    if not gamma > 0:
        raise SpdallocError(f"packing constant must be > 0, got {gamma}")
    capped = solve_capped(t, float(c))
    order = sorted(capped.shares, key=lambda v: (-capped.shares[v], v))
    assignment, boundaries, overflow = pack(order, capped.shares, c, gamma)
    used = len({r for r in assignment.values()})
    return DiscreteSolveReport(
        Allocation(assignment, c), capped, boundaries, gamma, used, overflow
    )


def approximation_diagnostics(
    t: SpdTree, c: int, report: DiscreteSolveReport
) -> ApproximationDiagnostics:
    """Cost ratios of the discrete allocation against its continuous floor."""
    ids = [leaf.id for leaf in leaves(t)]
    if set(report.allocation.assignment) != set(ids):
        raise MismatchedReport("report allocation does not cover this tree's tasks")
    if report.shares_used.capacity != float(c):
        raise MismatchedReport(
            f"report was solved for capacity {report.shares_used.capacity}, not {c}"
        )
    g = expand(t)
    d = streaming_cost(g, report.allocation).total_cost
    d_hat = hat_cost(g, report.allocation)
    delta = continuous_cost(t, report.shares_used.shares).total_cost
    n = len(ids)
    bound = report.gamma * n ** (2.0 / c) + 1.0
    per_task_ok: bool | None = None
    if not report.overflow:
        sizes = report.allocation.resource_sizes()
        per_task_ok = all(
            sizes[report.allocation.assignment[v]]
            <= block_size(n, c, report.gamma, report.shares_used.shares[v])
            for v in ids
        )
    return ApproximationDiagnostics(
        d=d,
        d_hat=d_hat,
        delta=delta,
        ratio_d=d / delta,
        ratio_hat=d_hat / delta,
        bound=bound,
        per_task_ok=per_task_ok,
        overflow=report.overflow,
    )
