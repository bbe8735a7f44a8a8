"""Exact continuous share allocation for series-parallel trees.

Shares are positive reals summing to the capacity ``c``; a leaf with share x
costs w/x, serial parts add up, parallel parts take the max, and the goal is
to minimize the resulting worst path cost delta.  The unconstrained optimum
has a closed form: annotate each subtree with an effective weight (leaf: w,
serial: squared sum of square roots, parallel: plain sum) and split capacity
top-down proportionally to square roots (serial) or weights (parallel).

``solve_capped`` additionally enforces share <= 1.  It repeatedly pins the
largest violating share to exactly 1 and re-solves the residual problem in
which pinned leaves contribute a fixed cost of w and consume one unit of
capacity.  Pinned costs shift serial splits additively but bend parallel
splits, so the residual re-solve works on value/multiplier curves with exact
derivatives instead of the closed form.
"""

from __future__ import annotations

from dataclasses import dataclass
import math

from .errors import SpdallocError, ZeroShare
from .graph import CostReport, _path_dp
from .spd import Inner, Leaf, SpdTree, expand, leaves, validate_tree

__all__ = [
    "AnnotatedTree",
    "ShareAssignment",
    "CappedResult",
    "compute_weights",
    "compute_mapping",
    "continuous_cost",
    "optimal_delta",
    "solve_capped",
]

_PIN_TOL = 1e-12


@dataclass(frozen=True)
class AnnotatedTree:
    """A tree node plus its effective weight; children mirror the tree."""

    node: SpdTree
    weight: float
    children: tuple["AnnotatedTree", ...]


@dataclass
class ShareAssignment:
    shares: dict[str, float]
    capacity: float

    def total(self) -> float:
        return sum(self.shares.values())


@dataclass
class CappedResult:
    shares: dict[str, float]
    capacity: float
    fixed: tuple[str, ...]  # leaves pinned to share 1, in pin order

    def total(self) -> float:
        return sum(self.shares.values())


def compute_weights(t: SpdTree) -> AnnotatedTree:
    """Post-order effective weights: leaf w; serial (sum of sqrt)^2; parallel sum."""
    validate_tree(t)
    return _annotate(t)


def _annotate(t: SpdTree) -> AnnotatedTree:
    if isinstance(t, Leaf):
        return AnnotatedTree(t, t.weight, ())
    children = tuple(_annotate(ch) for ch in t.children)
    if t.op == "s":
        weight = sum(math.sqrt(ch.weight) for ch in children) ** 2
    else:
        weight = sum(ch.weight for ch in children)
    return AnnotatedTree(t, weight, children)


def compute_mapping(annotated: AnnotatedTree, c: float) -> ShareAssignment:
    """Split capacity c over the leaves; optimal for the uncapped problem."""
    if not c > 0:
        raise SpdallocError(f"capacity must be > 0, got {c}")
    shares: dict[str, float] = {}

    def walk(node: AnnotatedTree, share: float) -> None:
        if isinstance(node.node, Leaf):
            shares[node.node.id] = share
            return
        if node.node.op == "s":
            parts = [math.sqrt(ch.weight) for ch in node.children]
        else:
            parts = [ch.weight for ch in node.children]
        total = sum(parts)
        for ch, part in zip(node.children, parts):
            walk(ch, share * (part / total))

    walk(annotated, float(c))
    return ShareAssignment(shares, float(c))


def optimal_delta(t: SpdTree, c: float) -> float:
    """Best achievable worst-path cost with capacity c (shares unconstrained)."""
    if not c > 0:
        raise SpdallocError(f"capacity must be > 0, got {c}")
    return compute_weights(t).weight / c


def continuous_cost(t: SpdTree, shares: ShareAssignment | dict[str, float]) -> CostReport:
    """Worst path cost of the expanded tree under per-leaf costs w/x (no transfers)."""
    share_map = shares.shares if isinstance(shares, ShareAssignment) else shares
    g = expand(t)
    node_cost: dict[str, float] = {}
    for v in g.nodes:
        x = share_map.get(v)
        if x is None or not x > 0:
            raise ZeroShare(f"task '{v}' has share {x!r}; shares must be > 0")
        node_cost[v] = g.node_weight[v] / x
    total, path = _path_dp(g, node_cost, {e: 0.0 for e in g.edges})
    return CostReport(total, path, node_cost, {})


# --- capped solve -------------------------------------------------------------
#
# Residual problem: minimize the worst path cost subject to sum of free shares
# = gamma, with each pinned leaf contributing constant cost w.  Each subtree z
# is summarized by its capacity curve K_z(V) = least capacity putting z's cost
# at V.  Two mutually inverse primitives traverse it:
#   value_at_multiplier: V where -K'(V) equals a given multiplier mu
#   multiplier_at_value: mu = -K'(V) for a given V
# Serial nodes share one multiplier across children (so they compose in
# mu-space); parallel children share one value (so they compose in V-space).
# Leaves are closed-form; each space switch is one safeguarded Newton solve.


@dataclass
class _RLeaf:
    w: float
    id: str
    floor = 0.0


@dataclass
class _RConst:
    floor: float


@dataclass
class _RSerial:
    children: list  # free-containing children
    offset: float  # summed floors of fully pinned children
    floor: float


@dataclass
class _RParallel:
    children: list
    floor: float


def _mirror(t: SpdTree, pinned: set[str]):
    """Collapse pinned leaves/subtrees into constants; returns _R* node."""
    if isinstance(t, Leaf):
        return _RConst(t.weight) if t.id in pinned else _RLeaf(t.weight, t.id)
    parts = [_mirror(ch, pinned) for ch in t.children]
    free = [p for p in parts if not isinstance(p, _RConst)]
    consts = [p.floor for p in parts if isinstance(p, _RConst)]
    if t.op == "s":
        offset = sum(consts)
        if not free:
            return _RConst(offset)
        return _RSerial(free, offset, offset + sum(ch.floor for ch in free))
    if not free:
        return _RConst(max(consts))
    return _RParallel(free, max([ch.floor for ch in free] + consts))


def _value_at_mu(z, mu: float) -> tuple[float, float]:
    """(V, dV/dmu) of the point where the capacity curve has slope -mu."""
    if isinstance(z, _RLeaf):
        v = math.sqrt(z.w / mu)
        return v, -0.5 * v / mu
    if isinstance(z, _RSerial):
        v, dv = z.offset, 0.0
        for ch in z.children:
            cv, cdv = _value_at_mu(ch, mu)
            v += cv
            dv += cdv
        return v, dv
    # Parallel: invert the summed multiplier curve over V > floor.
    return _solve_value(z, mu)


def _mu_at_value(z, v: float) -> tuple[float, float]:
    """(mu, dmu/dV) with mu = -K'(V); requires v > z.floor."""
    if isinstance(z, _RLeaf):
        return z.w / (v * v), -2.0 * z.w / (v * v * v)
    if isinstance(z, _RParallel):
        mu, dmu = 0.0, 0.0
        for ch in z.children:
            cm, cdm = _mu_at_value(ch, v)
            mu += cm
            dmu += cdm
        return mu, dmu
    # Serial: invert the summed value curve over mu > 0.
    return _solve_mu(z, v)


def _solve_mu(z: _RSerial, v_target: float) -> tuple[float, float]:
    """Find mu with value_at_mu(z, mu) = v_target (decreasing in mu)."""
    mu = 1.0
    val, dval = _value_at_mu(z, mu)
    lo = hi = None  # lo: mu with val > target; hi: mu with val < target
    for _ in range(400):
        if val > v_target:
            if dval == 0.0:
                # Saturated: every free child sits on a pinned-floor kink, so
                # the value cannot be driven down to the target.  Report the
                # kink point itself (flat curve, like _solve_value's kink).
                return mu, 0.0
            lo = mu
            mu *= 256.0
        else:
            hi = mu
            mu /= 256.0
        if lo is not None and hi is not None:
            break
        if not 1e-280 < mu < 1e280:
            raise SpdallocError("capped solve failed to bracket a serial split")
        val, dval = _value_at_mu(z, mu)
    else:
        raise SpdallocError("capped solve failed to bracket a serial split")
    if lo > hi:
        lo, hi = hi, lo
    mu = math.sqrt(lo * hi)
    for _ in range(200):
        val, dval = _value_at_mu(z, mu)
        if abs(val - v_target) <= 1e-14 * (1.0 + abs(v_target)):
            break
        if val > v_target:
            lo = mu
        else:
            hi = mu
        step_ok = dval < 0
        if step_ok:
            nxt = mu + (v_target - val) / dval
            step_ok = lo < nxt < hi
        mu = nxt if step_ok else math.sqrt(lo * hi)
        if hi - lo <= 1e-15 * hi:
            break
    # dmu/dV along the optimal split is 1/(dV/dmu).
    return mu, (1.0 / dval if dval < 0 else 0.0)


def _solve_value(z: _RParallel, mu_target: float) -> tuple[float, float]:
    """Find V with mu_at_value(z, V) = mu_target (decreasing in V)."""
    scale = max(1.0, z.floor)
    v_lo = z.floor + 1e-13 * scale
    mu_lo, _ = _mu_at_value(z, v_lo)
    if mu_lo <= mu_target:
        # Kink: a pinned floor binds; extra pressure cannot lower the value.
        return v_lo, 0.0
    step = scale
    lo = v_lo
    for _ in range(400):
        hi = z.floor + step
        mu_hi, dmu_hi = _mu_at_value(z, hi)
        if mu_hi < mu_target:
            break
        lo = hi
        step *= 16.0
        if step > 1e280:
            raise SpdallocError("capped solve failed to bracket a parallel value")
    else:
        raise SpdallocError("capped solve failed to bracket a parallel value")
    v = 0.5 * (lo + hi)
    dmu = dmu_hi
    for _ in range(200):
        mu, dmu = _mu_at_value(z, v)
        if abs(mu - mu_target) <= 1e-14 * (1.0 + abs(mu_target)):
            break
        if mu > mu_target:
            lo = v
        else:
            hi = v
        step_ok = dmu < 0
        if step_ok:
            nxt = v + (mu_target - mu) / dmu
            step_ok = lo < nxt < hi
        v = nxt if step_ok else 0.5 * (lo + hi)
        if hi - lo <= 1e-15 * max(abs(hi), 1.0):
            break
    return v, (1.0 / dmu if dmu < 0 else 0.0)


def _capacity_at_value(z, v: float) -> float:
    if isinstance(z, _RLeaf):
        return z.w / v
    if isinstance(z, _RParallel):
        return sum(_capacity_at_value(ch, v) for ch in z.children)
    mu, _ = _mu_at_value(z, v)
    return sum(_capacity_at_mu(ch, mu) for ch in z.children)


def _capacity_at_mu(z, mu: float) -> float:
    if isinstance(z, _RLeaf):
        return math.sqrt(z.w * mu)
    if isinstance(z, _RSerial):
        return sum(_capacity_at_mu(ch, mu) for ch in z.children)
    v, _ = _value_at_mu(z, mu)
    return sum(_capacity_at_value(ch, v) for ch in z.children)


def _assign_at_value(z, v: float, out: dict[str, float]) -> None:
    if isinstance(z, _RLeaf):
        out[z.id] = z.w / v
        return
    if isinstance(z, _RParallel):
        for ch in z.children:
            _assign_at_value(ch, v, out)
        return
    mu, _ = _mu_at_value(z, v)
    for ch in z.children:
        cv, _ = _value_at_mu(ch, mu)
        _assign_at_value(ch, cv, out)


def _solve_residual(t: SpdTree, pinned: set[str], gamma: float) -> dict[str, float]:
    """Optimal free shares summing to gamma, pinned leaves fixed at cost w."""
    root = _mirror(t, pinned)
    if isinstance(root, _RConst):
        return {}
    scale = max(1.0, root.floor)
    # Bracket V* with capacity(lo) >= gamma >= capacity(hi).
    step = scale
    for _ in range(400):
        hi = root.floor + step
        k_hi = _capacity_at_value(root, hi)
        if k_hi < gamma:
            break
        step *= 16.0
        if step > 1e280:
            raise SpdallocError("capped solve failed to bracket the residual value")
    else:
        raise SpdallocError("capped solve failed to bracket the residual value")
    step = min(step, scale)
    lo = None
    while step > 1e-14 * scale:
        cand = root.floor + step
        if cand < hi and _capacity_at_value(root, cand) >= gamma:
            lo = cand
            break
        step /= 16.0
    if lo is None:
        # Excess capacity: pinned floors dominate; spread the surplus evenly.
        v_min = root.floor + step * 16.0
        shares: dict[str, float] = {}
        _assign_at_value(root, v_min, shares)
        used = sum(shares.values())
        factor = gamma / used
        return {k: x * factor for k, x in shares.items()}
    v = 0.5 * (lo + hi)
    for _ in range(200):
        k = _capacity_at_value(root, v)
        if abs(k - gamma) <= 1e-14 * gamma:
            break
        if k > gamma:
            lo = v
        else:
            hi = v
        mu, _ = _mu_at_value(root, v)  # dK/dV = -mu
        nxt = v + (k - gamma) / mu if mu > 0 else v
        v = nxt if lo < nxt < hi else 0.5 * (lo + hi)
        if hi - lo <= 1e-15 * max(abs(hi), 1.0):
            break
    shares = {}
    _assign_at_value(root, v, shares)
    return shares


def solve_capped(t: SpdTree, c: float) -> CappedResult:
    """Optimal shares under sum = c and share <= 1 (iterative pinning)."""
    if not c > 0:
        raise SpdallocError(f"capacity must be > 0, got {c}")
    validate_tree(t)
    all_leaves = [leaf.id for leaf in leaves(t)]
    pins: list[str] = []
    shares: dict[str, float] = {}
    while True:
        free = [v for v in all_leaves if v not in pins]
        if not free:
            shares = {}
            break
        gamma = c - len(pins)
        assert gamma > 0, "residual capacity exhausted with free tasks remaining"
        if not pins:
            shares = compute_mapping(compute_weights(t), c).shares
        else:
            shares = _solve_residual(t, set(pins), gamma)
        over = [v for v in free if shares[v] > 1.0 + _PIN_TOL]
        if not over:
            break
        over.sort(key=lambda v: (-shares[v], v))
        pins.append(over[0])
    final = {v: 1.0 for v in pins}
    for v, x in shares.items():
        if v not in final:
            final[v] = x
    final = {v: final[v] for v in all_leaves}
    return CappedResult(final, float(c), tuple(pins))
