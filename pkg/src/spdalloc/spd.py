"""Series-parallel-decomposable task trees.

A tree is either a weighted leaf (one task) or a serial/parallel composition
of two or more subtrees.  Serial composition connects every sink of one part
to every source of the next with a single per-node edge weight; parallel
composition is disjoint union.  ``expand`` materializes the tree as a
StreamingGraph.
"""

from __future__ import annotations

from dataclasses import dataclass, field
import re

from .errors import (
    DuplicateLeafId,
    FormatMismatch,
    IdCollision,
    TreeError,
    TreeSyntaxError,
)
from .graph import StreamingGraph, validate_graph

__all__ = [
    "SpdTree",
    "Leaf",
    "Inner",
    "serial",
    "parallel",
    "validate_tree",
    "leaves",
    "leaf_count",
    "tree_weight_sum",
    "compose_serial",
    "compose_parallel",
    "expand",
    "parse_tree",
    "serialize_tree",
    "tree_to_dict",
    "tree_from_dict",
]


@dataclass(frozen=True)
class Leaf:
    id: str
    weight: float


@dataclass(frozen=True)
class Inner:
    op: str  # "s" or "p"
    children: tuple["SpdTree", ...]
    edge_weight: float = 0.0  # transfer weight of edges a serial node creates


SpdTree = Leaf | Inner


def serial(*children: SpdTree, b: float = 0.0) -> Inner:
    return Inner("s", tuple(children), float(b))


def parallel(*children: SpdTree) -> Inner:
    return Inner("p", tuple(children))


def validate_tree(t: SpdTree) -> None:
    """Reject bad arity, non-positive leaf weights, duplicate leaf ids and
    transfer weights attached to parallel nodes."""
    seen: set[str] = set()

    def walk(node: SpdTree) -> None:
        if isinstance(node, Leaf):
            if not node.weight > 0:
                raise TreeError(f"leaf '{node.id}' has weight {node.weight}; must be > 0")
            if node.id in seen:
                raise DuplicateLeafId(f"duplicate leaf id '{node.id}'")
            seen.add(node.id)
            return
        if node.op not in ("s", "p"):
            raise TreeError(f"unknown composition op {node.op!r}")
        if len(node.children) < 2:
            raise TreeError(f"'{node.op}' node needs at least 2 children, has {len(node.children)}")
        if node.op == "p" and node.edge_weight != 0.0:
            raise TreeError("parallel composition cannot carry a transfer weight")
        if node.edge_weight < 0:
            raise TreeError(f"serial transfer weight {node.edge_weight} must be >= 0")
        for ch in node.children:
            walk(ch)

    walk(t)


def leaves(t: SpdTree) -> list[Leaf]:
    """Leaves in left-to-right order."""
    out: list[Leaf] = []
    stack = [t]
    while stack:
        node = stack.pop()
        if isinstance(node, Leaf):
            out.append(node)
        else:
            stack.extend(reversed(node.children))
    return out


def leaf_count(t: SpdTree) -> int:
    return len(leaves(t))


def tree_weight_sum(t: SpdTree) -> float:
    return sum(leaf.weight for leaf in leaves(t))


# --- graph composition ---------------------------------------------------------


def _check_disjoint(g1: StreamingGraph, g2: StreamingGraph) -> None:
    shared = set(g1.nodes) & set(g2.nodes)
    if shared:
        raise IdCollision(f"graphs share task ids {sorted(shared)}")


def compose_serial(g1: StreamingGraph, g2: StreamingGraph, b: float = 0.0) -> StreamingGraph:
    """Connect every sink of g1 to every source of g2 with weight-b edges."""
    from .graph import sinks, sources

    validate_graph(g1)
    validate_graph(g2)
    _check_disjoint(g1, g2)
    node_weights = dict(g1.node_weight)
    node_weights.update(g2.node_weight)
    # Preserve original orders.
    node_weights = {v: node_weights[v] for v in (*g1.nodes, *g2.nodes)}
    edges = [(u, v, g1.edge_weight[(u, v)]) for u, v in g1.edges]
    edges += [(u, v, g2.edge_weight[(u, v)]) for u, v in g2.edges]
    edges += [(t, s, float(b)) for t in sinks(g1) for s in sources(g2)]
    g = StreamingGraph(node_weights, edges)
    validate_graph(g)
    return g


def compose_parallel(g1: StreamingGraph, g2: StreamingGraph) -> StreamingGraph:
    """Disjoint union."""
    validate_graph(g1)
    validate_graph(g2)
    _check_disjoint(g1, g2)
    node_weights = {v: g1.node_weight[v] for v in g1.nodes}
    node_weights.update({v: g2.node_weight[v] for v in g2.nodes})
    edges = [(u, v, g1.edge_weight[(u, v)]) for u, v in g1.edges]
    edges += [(u, v, g2.edge_weight[(u, v)]) for u, v in g2.edges]
    g = StreamingGraph(node_weights, edges)
    validate_graph(g)
    return g


def expand(t: SpdTree) -> StreamingGraph:
    """Materialize the tree as a StreamingGraph in one post-order pass."""
    validate_tree(t)

    def build(node: SpdTree) -> tuple[dict[str, float], list, list[str], list[str]]:
        if isinstance(node, Leaf):
            return {node.id: node.weight}, [], [node.id], [node.id]
        weights: dict[str, float] = {}
        edges: list[tuple[str, str, float]] = []
        if node.op == "p":
            srcs: list[str] = []
            snks: list[str] = []
            for ch in node.children:
                w, e, s, k = build(ch)
                weights.update(w)
                edges.extend(e)
                srcs.extend(s)
                snks.extend(k)
            return weights, edges, srcs, snks
        # Serial: chain children left to right.
        first = True
        srcs, snks = [], []
        for ch in node.children:
            w, e, s, k = build(ch)
            weights.update(w)
            edges.extend(e)
            if first:
                srcs = s
                first = False
            else:
                edges.extend((u, v, node.edge_weight) for u in snks for v in s)
            snks = k
        return weights, edges, srcs, snks

    weights, edges, _, _ = build(t)
    g = StreamingGraph(weights, edges)
    validate_graph(g)
    return g


# --- concise text form -----------------------------------------------------------

_TOKEN_RE = re.compile(
    r"(?P<ws>\s+)"
    r"|(?P<num>\d+(?:\.\d+)?(?:[eE][+-]?\d+)?)"
    r"|(?P<id>[A-Za-z_][A-Za-z0-9_]*)"
    r"|(?P<sym>[(),:\[\]=])"
)


class _Tokens:
    def __init__(self, text: str):
        self.items: list[tuple[str, str, int, int]] = []  # kind, value, line, col
        line, col = 1, 1
        pos = 0
        while pos < len(text):
            m = _TOKEN_RE.match(text, pos)
            if m is None:
                raise TreeSyntaxError(f"unexpected character {text[pos]!r}", line, col)
            kind = m.lastgroup
            value = m.group()
            if kind != "ws":
                self.items.append((kind, value, line, col))
            newlines = value.count("\n")
            if newlines:
                line += newlines
                col = len(value) - value.rfind("\n")
            else:
                col += len(value)
            pos = m.end()
        self.items.append(("eof", "", line, col))
        self.i = 0

    def peek(self) -> tuple[str, str, int, int]:
        return self.items[self.i]

    def next(self) -> tuple[str, str, int, int]:
        tok = self.items[self.i]
        self.i += 1
        return tok

    def expect(self, kind: str, value: str | None = None) -> tuple[str, str, int, int]:
        tok = self.next()
        if tok[0] != kind or (value is not None and tok[1] != value):
            want = value if value is not None else kind
            raise TreeSyntaxError(f"expected {want!r}, found {tok[1] or 'end of input'!r}", tok[2], tok[3])
        return tok


def parse_tree(text: str) -> SpdTree:
    """Parse the concise form, e.g. ``s(a:1, p(b:2, c:3))[b=5]``."""
    toks = _Tokens(text)
    tree = _parse_node(toks)
    tok = toks.peek()
    if tok[0] != "eof":
        raise TreeSyntaxError(f"trailing input {tok[1]!r}", tok[2], tok[3])
    validate_tree(tree)
    return tree


def _parse_node(toks: _Tokens) -> SpdTree:
    kind, value, line, col = toks.next()
    if kind != "id":
        raise TreeSyntaxError(f"expected a task id or composition, found {value or 'end of input'!r}", line, col)
    if value in ("s", "p") and toks.peek()[:2] == ("sym", "("):
        toks.next()
        children = [_parse_node(toks)]
        while True:
            kind2, value2, line2, col2 = toks.next()
            if (kind2, value2) == ("sym", ","):
                children.append(_parse_node(toks))
            elif (kind2, value2) == ("sym", ")"):
                break
            else:
                raise TreeSyntaxError(f"expected ',' or ')', found {value2 or 'end of input'!r}", line2, col2)
        if len(children) < 2:
            raise TreeSyntaxError(f"'{value}' needs at least 2 children", line, col)
        edge_weight = 0.0
        if toks.peek()[:2] == ("sym", "["):
            _, _, bline, bcol = toks.next()
            if value != "s":
                raise TreeSyntaxError("transfer weight [b=...] is only valid on 's' nodes", bline, bcol)
            name = toks.expect("id")
            if name[1] != "b":
                raise TreeSyntaxError(f"expected 'b', found {name[1]!r}", name[2], name[3])
            toks.expect("sym", "=")
            num = toks.expect("num")
            edge_weight = float(num[1])
            toks.expect("sym", "]")
        return Inner(value, tuple(children), edge_weight)
    # Leaf.
    toks.expect("sym", ":")
    num = toks.expect("num")
    w = float(num[1])
    return Leaf(value, w)


def _fmt_num(x: float) -> str:
    if float(x).is_integer() and abs(x) < 1e16:
        return str(int(x))
    return repr(float(x))


def serialize_tree(t: SpdTree) -> str:
    if isinstance(t, Leaf):
        return f"{t.id}:{_fmt_num(t.weight)}"
    body = ", ".join(serialize_tree(ch) for ch in t.children)
    suffix = f"[b={_fmt_num(t.edge_weight)}]" if t.op == "s" and t.edge_weight != 0 else ""
    return f"{t.op}({body}){suffix}"


# --- JSON form ---------------------------------------------------------------------


def tree_to_dict(t: SpdTree) -> dict:
    if isinstance(t, Leaf):
        return {"leaf": t.id, "w": t.weight}
    out: dict = {"op": t.op, "children": [tree_to_dict(ch) for ch in t.children]}
    if t.op == "s" and t.edge_weight != 0:
        out["b"] = t.edge_weight
    return out


def tree_from_dict(data: dict) -> SpdTree:
    tree = _tree_from_dict_inner(data)
    validate_tree(tree)
    return tree


def _tree_from_dict_inner(data: dict) -> SpdTree:
    if not isinstance(data, dict):
        raise FormatMismatch(f"tree node must be an object, got {type(data).__name__}")
    keys = set(data)
    if "leaf" in keys:
        if keys != {"leaf", "w"}:
            raise FormatMismatch(f"leaf object needs exactly keys leaf/w, got {sorted(keys)}")
        return Leaf(str(data["leaf"]), float(data["w"]))
    if "op" in keys:
        allowed = {"op", "children"} | ({"b"} if data.get("op") == "s" else set())
        if keys - allowed:
            raise FormatMismatch(f"composition object has unknown keys {sorted(keys - allowed)}")
        if "children" not in keys or not isinstance(data["children"], list):
            raise FormatMismatch("composition object needs a 'children' array")
        children = tuple(_tree_from_dict_inner(ch) for ch in data["children"])
        return Inner(str(data["op"]), children, float(data.get("b", 0.0)))
    raise FormatMismatch("tree object needs either 'leaf' or 'op'")
