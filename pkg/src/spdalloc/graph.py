"""Weighted streaming task graphs and their cost model.

A graph is a DAG of tasks with positive node weights (per-item processing
effort) and non-negative edge weights (per-item transfer effort).  Given an
allocation of tasks to ``c`` uniform resources, the processing cost of a task
grows with the number of tasks sharing its resource, and an edge costs its
weight exactly when its endpoints live on different resources.  The cost of
the whole graph is the most expensive source-to-sink path.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
import math

from .errors import (
    AllocationMismatch,
    CycleDetected,
    DuplicateNode,
    NegativeEdgeWeight,
    NonPositiveNodeWeight,
    UnknownEdge,
    UnknownTask,
)

__all__ = [
    "StreamingGraph",
    "Allocation",
    "CostReport",
    "validate_graph",
    "sources",
    "sinks",
    "processing_cost",
    "transfer_cost",
    "streaming_cost",
    "hat_cost",
    "diameter",
    "check_comp_constrained_bound",
    "graph_to_dict",
    "graph_from_dict",
]


class StreamingGraph:
    """Immutable-by-convention DAG with weighted nodes and edges.

    ``node_weights`` preserves insertion order; it becomes the canonical node
    order for all deterministic traversals.  ``meta`` is an optional advisory
    dict attached by instance generators; it takes no part in equality or
    serialization.
    """

    def __init__(
        self,
        node_weights: dict[str, float],
        edges: list[tuple[str, str, float]],
        meta: dict | None = None,
    ):
        self.nodes: tuple[str, ...] = tuple(node_weights)
        self.node_weight: dict[str, float] = {v: float(w) for v, w in node_weights.items()}
        self.edges: tuple[tuple[str, str], ...] = tuple((u, v) for u, v, _ in edges)
        self.edge_weight: dict[tuple[str, str], float] = {
            (u, v): float(b) for u, v, b in edges
        }
        self.meta: dict = dict(meta) if meta else {}
        self._validated = False
        self._topo: tuple[str, ...] | None = None

    # -- structure ---------------------------------------------------------

    def successors(self, v: str) -> list[str]:
        return self._succ[v]

    def predecessors(self, v: str) -> list[str]:
        return self._pred[v]

    def _build_adjacency(self) -> None:
        self._succ: dict[str, list[str]] = {v: [] for v in self.nodes}
        self._pred: dict[str, list[str]] = {v: [] for v in self.nodes}
        for u, v in self.edges:
            self._succ[u].append(v)
            self._pred[v].append(u)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, StreamingGraph):
            return NotImplemented
        return (
            self.nodes == other.nodes
            and self.node_weight == other.node_weight
            and set(self.edges) == set(other.edges)
            and self.edge_weight == other.edge_weight
        )

    def __repr__(self) -> str:
        return f"StreamingGraph({len(self.nodes)} nodes, {len(self.edges)} edges)"


@dataclass(frozen=True)
class Allocation:
    """Assignment of task ids to resource indices 1..resource_count."""

    assignment: dict[str, int]
    resource_count: int

    def resource_sizes(self) -> dict[int, int]:
        sizes: dict[int, int] = {}
        for r in self.assignment.values():
            sizes[r] = sizes.get(r, 0) + 1
        return sizes


@dataclass
class CostReport:
    """Evaluated cost of a graph under one allocation (or share vector)."""

    total_cost: float
    critical_path: tuple[str, ...]
    per_node_cost: dict[str, float] = field(default_factory=dict)
    per_resource_load: dict[int, tuple[int, float]] = field(default_factory=dict)


# --- validation ------------------------------------------------------------


def validate_graph(g: StreamingGraph) -> None:
    """Check node/edge weights, reject duplicates, self-loops, parallel edges
    and cycles.  Caches a topological order on success; idempotent."""
    if g._validated:
        return
    if len(set(g.nodes)) != len(g.nodes):
        seen: set[str] = set()
        for v in g.nodes:
            if v in seen:
                raise DuplicateNode(f"duplicate task id '{v}'")
            seen.add(v)
    for v, w in g.node_weight.items():
        if not (w > 0) or math.isnan(w) or math.isinf(w):
            raise NonPositiveNodeWeight(f"task '{v}' has weight {w}; weights must be > 0")
    if len(set(g.edges)) != len(g.edges):
        seen_e: set[tuple[str, str]] = set()
        for e in g.edges:
            if e in seen_e:
                raise DuplicateNode(f"parallel edge {e[0]}->{e[1]}")
            seen_e.add(e)
    node_set = set(g.nodes)
    for (u, v), b in g.edge_weight.items():
        if u not in node_set:
            raise UnknownTask(f"edge references unknown task '{u}'")
        if v not in node_set:
            raise UnknownTask(f"edge references unknown task '{v}'")
        if u == v:
            raise CycleDetected(f"self-loop {u}->{v}")
        if b < 0 or math.isnan(b):
            raise NegativeEdgeWeight(f"edge {u}->{v} has weight {b}; weights must be >= 0")

    g._build_adjacency()
    g._topo = _topological_order(g)
    g._validated = True


def _topological_order(g: StreamingGraph) -> tuple[str, ...]:
    indeg = {v: len(g._pred[v]) for v in g.nodes}
    queue = deque(v for v in g.nodes if indeg[v] == 0)
    order: list[str] = []
    while queue:
        v = queue.popleft()
        order.append(v)
        for w in g._succ[v]:
            indeg[w] -= 1
            if indeg[w] == 0:
                queue.append(w)
    if len(order) < len(g.nodes):
        raise CycleDetected(_find_cycle_edge(g, {v for v in g.nodes if indeg[v] > 0}))
    return tuple(order)


def _find_cycle_edge(g: StreamingGraph, suspects: set[str]) -> str:
    # Walk forward inside the residual subgraph until a node repeats.
    start = next(v for v in g.nodes if v in suspects)
    seen: dict[str, str | None] = {start: None}
    v = start
    while True:
        nxt = next(w for w in g._succ[v] if w in suspects)
        if nxt in seen:
            return f"cycle detected through edge {v}->{nxt}"
        seen[nxt] = v
        v = nxt


def _topo(g: StreamingGraph) -> tuple[str, ...]:
    validate_graph(g)
    assert g._topo is not None
    return g._topo


def sources(g: StreamingGraph) -> list[str]:
    validate_graph(g)
    return [v for v in g.nodes if not g._pred[v]]


def sinks(g: StreamingGraph) -> list[str]:
    validate_graph(g)
    return [v for v in g.nodes if not g._succ[v]]


# --- allocation-dependent costs ---------------------------------------------


def _check_allocation(g: StreamingGraph, alloc: Allocation) -> None:
    for v in g.nodes:
        r = alloc.assignment.get(v)
        if r is None:
            raise AllocationMismatch(f"allocation missing task '{v}'")
        if not (1 <= r <= alloc.resource_count):
            raise AllocationMismatch(
                f"task '{v}' assigned to resource {r}, valid range is 1..{alloc.resource_count}"
            )
    if len(alloc.assignment) != len(g.nodes):
        # extra entries would inflate the fair-share load counts silently
        stray = sorted(set(alloc.assignment) - set(g.nodes))[0]
        raise AllocationMismatch(f"allocation covers unknown task '{stray}'")


def processing_cost(g: StreamingGraph, alloc: Allocation, v: str) -> float:
    """w(v) times the number of tasks sharing v's resource (v included)."""
    validate_graph(g)
    if v not in g.node_weight:
        raise UnknownTask(f"unknown task '{v}'")
    _check_allocation(g, alloc)
    sizes = alloc.resource_sizes()
    return g.node_weight[v] * sizes[alloc.assignment[v]]

def transfer_cost(g: StreamingGraph, alloc: Allocation, e: tuple[str, str]) -> float:
    """b(e) if the endpoints are split across resources, else 0."""
    validate_graph(g)
    if e not in g.edge_weight:
        raise UnknownEdge(f"unknown edge {e[0]}->{e[1]}")
    _check_allocation(g, alloc)
    u, v = e
    return g.edge_weight[e] if alloc.assignment[u] != alloc.assignment[v] else 0.0


def _path_dp(
    g: StreamingGraph,
    node_cost: dict[str, float],
    edge_cost: dict[tuple[str, str], float],
) -> tuple[float, tuple[str, ...]]:
    """Max-cost source-sink path via DP over a topological order.

    Returns (total, path); among maximizing paths the one whose id sequence is
    lexicographically smallest.  Single-node graphs yield single-node paths.
    """
    order = _topo(g)
    down: dict[str, float] = {}
    for v in reversed(order):
        best = 0.0
        first = True
        for w in g._succ[v]:
            cand = edge_cost[(v, w)] + down[w]
            if first or cand > best:
                best, first = cand, False
        down[v] = node_cost[v] + (0.0 if first else best)

    srcs = [v for v in g.nodes if not g._pred[v]]
    total = max(down[s] for s in srcs)
    start = min(s for s in srcs if down[s] == total)
    path = [start]
    v = start
    while g._succ[v]:
        # Group the sum exactly as the forward pass did (node cost added last)
        # so the equality test is bit-exact despite float non-associativity.
        nxt = min(
            w
            for w in g._succ[v]
            if down[v] == node_cost[v] + (edge_cost[(v, w)] + down[w])
        )
        path.append(nxt)
        v = nxt
    return total, tuple(path)


def streaming_cost(g: StreamingGraph, alloc: Allocation) -> CostReport:
    """Max over source-sink paths of processing plus split-transfer costs."""
    validate_graph(g)
    _check_allocation(g, alloc)
    sizes = alloc.resource_sizes()
    node_cost = {v: g.node_weight[v] * sizes[alloc.assignment[v]] for v in g.nodes}
    edge_cost = {
        e: (g.edge_weight[e] if alloc.assignment[e[0]] != alloc.assignment[e[1]] else 0.0)
        for e in g.edges
    }
    total, path = _path_dp(g, node_cost, edge_cost)
    load: dict[int, tuple[int, float]] = {}
    for v in g.nodes:
        r = alloc.assignment[v]
        cnt, ws = load.get(r, (0, 0.0))
        load[r] = (cnt + 1, ws + g.node_weight[v])
    return CostReport(total, path, node_cost, load)


def hat_cost(g: StreamingGraph, alloc: Allocation) -> float:
    """Streaming cost with every transfer cost forced to zero."""
    validate_graph(g)
    _check_allocation(g, alloc)
    sizes = alloc.resource_sizes()
    node_cost = {v: g.node_weight[v] * sizes[alloc.assignment[v]] for v in g.nodes}
    total, _ = _path_dp(g, node_cost, {e: 0.0 for e in g.edges})
    return total


def diameter(g: StreamingGraph) -> int:
    """Largest node count over source-sink paths (a single node counts 1)."""
    order = _topo(g)
    depth: dict[str, int] = {}
    for v in order:
        depth[v] = 1 + max((depth[u] for u in g._pred[v]), default=0)
    return max(depth[v] for v in g.nodes if not g._succ[v])


def check_comp_constrained_bound(g: StreamingGraph, c: int, k: float = 1.0) -> bool:
    """True iff every edge weight is at most k * w_min * ceil(D / c)."""
    validate_graph(g)
    if c < 1:
        raise AllocationMismatch(f"resource count must be >= 1, got {c}")
    if not g.edge_weight:
        return True
    w_min = min(g.node_weight.values())
    bound = k * w_min * math.ceil(diameter(g) / c)
    return all(b <= bound for b in g.edge_weight.values())


# --- JSON form ----------------------------------------------------------------

_NODE_KEYS = {"id", "w"}
_EDGE_KEYS = {"u", "v", "b"}


def graph_to_dict(g: StreamingGraph) -> dict:
    return {
        "nodes": [{"id": v, "w": g.node_weight[v]} for v in g.nodes],
        "edges": [{"u": u, "v": v, "b": g.edge_weight[(u, v)]} for u, v in g.edges],
    }


def graph_from_dict(data: dict) -> StreamingGraph:
    from .errors import FormatMismatch

    if not isinstance(data, dict) or set(data) != {"nodes", "edges"}:
        off = sorted(set(data) ^ {"nodes", "edges"}) if isinstance(data, dict) else []
        raise FormatMismatch(
            f"graph object needs exactly the keys nodes/edges; mismatch on {off}"
            if off
            else "graph payload must be an object with nodes/edges"
        )
    nodes = data["nodes"]
    edges = data["edges"]
    if not isinstance(nodes, list) or not isinstance(edges, list):
        raise FormatMismatch("graph 'nodes' and 'edges' must be arrays")
    node_weights: dict[str, float] = {}
    for item in nodes:
        if not isinstance(item, dict) or set(item) != _NODE_KEYS:
            raise FormatMismatch(f"graph node entries need exactly keys id/w, got {item!r}")
        if item["id"] in node_weights:
            raise DuplicateNode(f"duplicate task id '{item['id']}'")
        node_weights[str(item["id"])] = float(item["w"])
    edge_list: list[tuple[str, str, float]] = []
    for item in edges:
        if not isinstance(item, dict) or set(item) != _EDGE_KEYS:
            raise FormatMismatch(f"graph edge entries need exactly keys u/v/b, got {item!r}")
        edge_list.append((str(item["u"]), str(item["v"]), float(item["b"])))
    g = StreamingGraph(node_weights, edge_list)
    validate_graph(g)
    return g
