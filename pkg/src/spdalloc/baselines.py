"""Reference allocators: single-resource, balanced-load, and greedy collocation.

``balanced_avg`` is an LPT surrogate for exact balanced partitioning (which is
NP-hard): heaviest task first onto the lightest resource.  Load ties prefer
the resource that already holds more tasks, then the lower index; this keeps
heavy outliers on small resources and reproduces the family of instances where
load balancing ignores per-task slowdown at its own peril.

The greedy collocation strategies walk the expanded graph's edges from
heaviest to lightest, tentatively force both endpoints onto one resource, and
keep or drop the constraint per policy.  Constraints never touch the share
computation; they are honored by the packing pass alone.
"""

from __future__ import annotations

from dataclasses import dataclass
import enum

from .continuous import solve_capped
from .discrete import pack
from .errors import SpdallocError
from .graph import Allocation, StreamingGraph, streaming_cost, validate_graph
from .spd import SpdTree, expand, leaves

__all__ = [
    "GreedyPolicy",
    "GreedyTrace",
    "trivial_single",
    "balanced_avg",
    "greedy_collocate",
    "greedy_trace",
]


def trivial_single(g: StreamingGraph) -> Allocation:
    """Everything on one resource; no transfers, every task slowed n-fold."""
    validate_graph(g)
    return Allocation({v: 1 for v in g.nodes}, 1)


def balanced_avg(g: StreamingGraph, c: int) -> Allocation:
    """Longest-processing-time load balancing, blind to collocation slowdown."""
    validate_graph(g)
    if c < 1:
        raise SpdallocError(f"resource count must be >= 1, got {c}")
    order = sorted(g.nodes, key=lambda v: -g.node_weight[v])
    load = [0.0] * c
    count = [0] * c
    assignment: dict[str, int] = {}
    for v in order:
        r = min(range(c), key=lambda i: (load[i], -count[i], i))
        assignment[v] = r + 1
        load[r] += g.node_weight[v]
        count[r] += 1
    return Allocation({v: assignment[v] for v in g.nodes}, c)


class GreedyPolicy(enum.Enum):
    RETAIN_IF_IMPROVES = "retain-if-improves"
    RETAIN_UNLESS_WORSE = "retain-unless-worse"
    RETAIN_UNLESS_PATH_WORSE = "retain-unless-path-worse"


@dataclass
class GreedyTrace:
    allocation: Allocation
    retained: list[tuple[str, str]]
    cost: float


class _UnionFind:
    def __init__(self, items):
        self.parent = {v: v for v in items}

    def find(self, v):
        while self.parent[v] != v:
            self.parent[v] = self.parent[self.parent[v]]
            v = self.parent[v]
        return v

    def union(self, a, b):
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self.parent[rb] = ra

    def groups(self) -> list[list[str]]:
        by_root: dict[str, list[str]] = {}
        for v in self.parent:
            by_root.setdefault(self.find(v), []).append(v)
        return [members for members in by_root.values() if len(members) > 1]


def _constrained_alloc(order, shares, c, gamma, groups) -> Allocation:
    assignment, _, _ = pack(order, shares, c, gamma, groups)
    return Allocation(assignment, c)


def _path_delta_through_edge(
    g: StreamingGraph,
    e: tuple[str, str],
    old: Allocation,
    new: Allocation,
) -> float:
    """Max over source-sink paths through e of (new cost - old cost)."""
    old_sizes = old.resource_sizes()
    new_sizes = new.resource_sizes()
    dn = {
        v: g.node_weight[v]
        * (new_sizes[new.assignment[v]] - old_sizes[old.assignment[v]])
        for v in g.nodes
    }
    de = {}
    for (u, v), b in g.edge_weight.items():
        was = b if old.assignment[u] != old.assignment[v] else 0.0
        now = b if new.assignment[u] != new.assignment[v] else 0.0
        de[(u, v)] = now - was
    up: dict[str, float] = {}
    for v in g._topo:
        up[v] = dn[v] + max(
            (up[u] + de[(u, v)] for u in g._pred[v]), default=0.0
        )
    down: dict[str, float] = {}
    for v in reversed(g._topo):
        down[v] = dn[v] + max(
            (de[(v, u)] + down[u] for u in g._succ[v]), default=0.0
        )
    u, v = e
    return up[u] + de[e] + down[v]


def greedy_trace(
    t: SpdTree,
    c: int,
    policy: GreedyPolicy,
    gamma: float = 2.0,
    graph: StreamingGraph | None = None,
) -> GreedyTrace:
    """Greedy edge collocation, returning the retained-constraint set too.

    ``graph`` overrides the expanded tree for cost evaluation and edge order
    (same node set required); shares always come from the unconstrained tree.
    """
    if c < 1:
        raise SpdallocError(f"resource count must be >= 1, got {c}")
    g = graph if graph is not None else expand(t)
    validate_graph(g)
    ids = {leaf.id for leaf in leaves(t)}
    if set(g.nodes) != ids:
        raise SpdallocError("override graph must cover exactly the tree's tasks")

    capped = solve_capped(t, float(c))
    order = sorted(capped.shares, key=lambda v: (-capped.shares[v], v))
    uf = _UnionFind(g.nodes)
    alloc = _constrained_alloc(order, capped.shares, c, gamma, uf.groups())
    cost = streaming_cost(g, alloc).total_cost
    retained: list[tuple[str, str]] = []

    edges = sorted(g.edges, key=lambda e: (-g.edge_weight[e], e[0], e[1]))
    for e in edges:
        u, v = e
        trial = _UnionFind(g.nodes)
        trial.parent = dict(uf.parent)
        trial.union(u, v)
        cand = _constrained_alloc(order, capped.shares, c, gamma, trial.groups())
        cand_cost = streaming_cost(g, cand).total_cost
        if policy is GreedyPolicy.RETAIN_IF_IMPROVES:
            keep = cand_cost < cost
        elif policy is GreedyPolicy.RETAIN_UNLESS_WORSE:
            keep = cand_cost <= cost
        else:
            keep = _path_delta_through_edge(g, e, alloc, cand) <= 1e-9
        if keep:
            uf = trial
            alloc = cand
            cost = cand_cost
            retained.append(e)
    return GreedyTrace(alloc, retained, cost)


def greedy_collocate(
    t: SpdTree,
    c: int,
    policy: GreedyPolicy,
    gamma: float = 2.0,
    graph: StreamingGraph | None = None,
) -> Allocation:
    return greedy_trace(t, c, policy, gamma, graph).allocation
