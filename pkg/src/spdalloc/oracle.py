"""Ground-truth oracles for small instances.

``brute_force_optimal`` enumerates set partitions of the task set into at most
c labeled resources using restricted growth strings (symmetry-reduced, lex
order) and evaluates streaming costs in vectorized batches.
``enumerate_paths`` lists every source-sink path.  ``numeric_continuous_min``
minimizes the continuous worst-path cost by exact pairwise share exchanges and
is deliberately independent of the closed-form solver it cross-checks.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
import math
import os
import warnings

import numpy as np

from .errors import InstanceTooLarge, SpdallocError, TooManyPaths
from .graph import Allocation, StreamingGraph, validate_graph
from .spd import SpdTree, expand, leaves

__all__ = [
    "ORACLE_ENV_VAR",
    "default_oracle_limit",
    "brute_force_optimal",
    "enumerate_paths",
    "numeric_continuous_min",
]

ORACLE_ENV_VAR = "SPD_ORACLE_MAX_N"
_DEFAULT_LIMITS = {2: 14, 3: 10}
_PATH_LIMIT = 10**6
_CHUNK = 1 << 14


def default_oracle_limit(c: int) -> int:
    env = os.environ.get(ORACLE_ENV_VAR)
    if env is not None:
        return int(env)
    return _DEFAULT_LIMITS.get(c, 8)


# --- exhaustive allocation search ---------------------------------------------


def _rgs_chunks(n: int, c: int, chunk: int):
    """Restricted growth strings over <= c labels, lexicographic, batched."""
    a = [0] * n
    m = [0] * n  # running prefix maximum
    buf = np.empty((chunk, n), dtype=np.int8)
    fill = 0
    while True:
        buf[fill] = a
        fill += 1
        if fill == chunk:
            yield buf.copy()
            fill = 0
        i = n - 1
        while i > 0 and a[i] >= min(c - 1, m[i - 1] + 1):
            i -= 1
        if i == 0:
            break
        a[i] += 1
        m[i] = max(m[i - 1], a[i])
        for j in range(i + 1, n):
            a[j] = 0
            m[j] = m[i]
    if fill:
        yield buf[:fill].copy()


def _full_chunks(n: int, c: int, chunk: int):
    """All c**n label vectors in lexicographic order, batched."""
    total = c**n
    powers = c ** np.arange(n - 1, -1, -1, dtype=np.int64)
    for start in range(0, total, chunk):
        ids = np.arange(start, min(start + chunk, total), dtype=np.int64)
        yield ((ids[:, None] // powers) % c).astype(np.int8)


def _batch_costs(
    labels: np.ndarray,
    w: np.ndarray,
    c: int,
    topo_idx: list[int],
    preds: list[list[tuple[int, float]]],
    sink_idx: list[int],
) -> np.ndarray:
    rows = labels.shape[0]
    flat = labels.astype(np.int64) + np.arange(rows)[:, None] * c
    counts = np.bincount(flat.ravel(), minlength=rows * c).reshape(rows, c)
    per_node = np.take_along_axis(counts, labels.astype(np.int64), axis=1)
    proc = per_node * w[None, :]
    best = np.empty_like(proc, dtype=np.float64)
    for v in topo_idx:
        col = proc[:, v].astype(np.float64)
        incoming = None
        for u, b in preds[v]:
            cand = best[:, u] + np.where(labels[:, u] != labels[:, v], b, 0.0)
            incoming = cand if incoming is None else np.maximum(incoming, cand)
        best[:, v] = col if incoming is None else col + incoming
    return best[:, sink_idx].max(axis=1)


def brute_force_optimal(
    g: StreamingGraph,
    c: int,
    max_n: int | None = None,
    workers: int = 1,
    symmetry_reduction: bool = True,
) -> tuple[Allocation, float]:
    """Exact minimum streaming cost over all allocations to c resources.

    Refuses after the size cap (per-c default, SPD_ORACLE_MAX_N, or max_n).
    Ties resolve to the lexicographically smallest canonical label string.
    """
    validate_graph(g)
    if c < 1:
        raise SpdallocError(f"resource count must be >= 1, got {c}")
    n = len(g.nodes)
    limit = max_n if max_n is not None else default_oracle_limit(c)
    if n > limit:
        raise InstanceTooLarge(
            f"exhaustive search over {n} tasks at c={c} exceeds the cap of {limit}; "
            f"raise max_n or {ORACLE_ENV_VAR} to override"
        )
    index = {v: i for i, v in enumerate(g.nodes)}
    w = np.array([g.node_weight[v] for v in g.nodes], dtype=np.float64)
    topo_idx = [index[v] for v in g._topo]
    preds = [[] for _ in g.nodes]
    for (u, v), b in g.edge_weight.items():
        preds[index[v]].append((index[u], b))
    sink_idx = [index[v] for v in g.nodes if not g._succ[v]]

    gen = _rgs_chunks(n, c, _CHUNK) if symmetry_reduction else _full_chunks(n, c, _CHUNK)

    def eval_chunk(args):
        pos, labels = args
        costs = _batch_costs(labels, w, c, topo_idx, preds, sink_idx)
        i = int(np.argmin(costs))
        return float(costs[i]), pos, i, labels[i].copy()

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(eval_chunk, enumerate(gen)))
    else:
        results = [eval_chunk(item) for item in enumerate(gen)]
    best = min(results, key=lambda r: (r[0], r[1], r[2]))
    labels = best[3]
    assignment = {v: int(labels[index[v]]) + 1 for v in g.nodes}
    return Allocation(assignment, c), best[0]


# --- path enumeration ------------------------------------------------------------


def enumerate_paths(g: StreamingGraph, limit: int = _PATH_LIMIT) -> list[tuple[str, ...]]:
    """All source-sink paths in lexicographic id order; refuses above limit."""
    validate_graph(g)
    counts: dict[str, int] = {}
    for v in reversed(g._topo):
        succ = g._succ[v]
        counts[v] = sum(counts[u] for u in succ) if succ else 1
    total = sum(counts[v] for v in g.nodes if not g._pred[v])
    if total > limit:
        raise TooManyPaths(f"graph has {total} source-sink paths, cap is {limit}")
    paths: list[tuple[str, ...]] = []
    stack: list[str] = []

    def walk(v: str) -> None:
        stack.append(v)
        if not g._succ[v]:
            paths.append(tuple(stack))
        else:
            for u in sorted(g._succ[v]):
                walk(u)
        stack.pop()

    for s in sorted(v for v in g.nodes if not g._pred[v]):
        walk(s)
    return paths


# --- numeric continuous minimizer -------------------------------------------------


def numeric_continuous_min(
    t: SpdTree,
    c: float,
    box_cap: float | None = None,
    starts: int = 12,
    seed: int = 0,
    max_sweeps: int = 400,
) -> tuple[dict[str, float], float]:
    """Projected pairwise coordinate descent with multi-start.

    Minimizes max over paths of sum(w/x) subject to sum(x) = c (and optionally
    x <= box_cap).  Each pairwise exchange is solved exactly as the minimum of
    at most four simple convex curves.  Because the max envelope is nonsmooth,
    two-coordinate moves can stall on corners where three or more paths are
    active; the best descent iterate is therefore polished by a sequential
    quadratic program on the epigraph form, which settles the corner exactly.
    Limited to 12 leaves.
    """
    if not c > 0:
        raise SpdallocError(f"capacity must be > 0, got {c}")
    leaf_list = leaves(t)
    n = len(leaf_list)
    if n > 12:
        raise InstanceTooLarge(f"numeric minimizer handles at most 12 leaves, got {n}")
    ids = [leaf.id for leaf in leaf_list]
    w = np.array([leaf.weight for leaf in leaf_list], dtype=np.float64)
    cap = float(box_cap) if box_cap is not None else math.inf

    if n == 1:
        x = min(c, cap)
        return {ids[0]: x}, float(w[0] / x)
    if n * cap <= c:
        shares = {v: cap for v in ids}
        g = expand(t)
        m = _path_matrix(g, ids)
        delta = float((m @ (w / cap)).max())
        return shares, delta

    g = expand(t)
    m = _path_matrix(g, ids)
    rng = np.random.default_rng(seed)
    pairs = [(i, j) for i in range(n) for j in range(n) if i < j]
    best_x: np.ndarray | None = None
    best_delta = math.inf
    for s in range(starts):
        if s == 0:
            x = np.full(n, c / n)
        else:
            u = rng.random(n) + 1e-3
            x = u / u.sum() * c
            x = _respread(x, c, cap)
        x, delta = _descend(x, w, m, c, cap, pairs, max_sweeps)
        if delta < best_delta - 1e-15:
            best_delta, best_x = delta, x
    assert best_x is not None
    best_x, best_delta = _sqp_polish(best_x, best_delta, w, m, c, cap)
    return {v: float(best_x[i]) for i, v in enumerate(ids)}, float(best_delta)


def _path_matrix(g: StreamingGraph, ids: list[str]) -> np.ndarray:
    paths = enumerate_paths(g)
    index = {v: i for i, v in enumerate(ids)}
    m = np.zeros((len(paths), len(ids)))
    for p, path in enumerate(paths):
        for v in path:
            m[p, index[v]] = 1.0
    return m


def _respread(x: np.ndarray, total: float, cap: float) -> np.ndarray:
    """Push capped overflow onto uncapped coordinates, keeping the sum."""
    x = x.copy()
    for _ in range(len(x)):
        over = x > cap
        excess = float((x[over] - cap).sum())
        if excess <= 0:
            break
        x[over] = cap
        free = ~over
        x[free] += excess * x[free] / x[free].sum()
    return np.minimum(x, cap)


def _descend(x, w, m, total, cap, pairs, max_sweeps):
    eps = 1e-12 * total
    costs = m @ (w / x)
    delta = float(costs.max())
    stale = 0
    for _ in range(max_sweeps):
        before = delta
        moved = False
        for i, j in pairs:
            a, b = w[i], w[j]
            mi = m[:, i] > 0
            mj = m[:, j] > 0
            ci, cj = a / x[i], b / x[j]
            base = costs - ci * mi - cj * mj
            k1 = _mmax(base, mi & mj)
            k2 = _mmax(base, mi & ~mj)
            k3 = _mmax(base, ~mi & mj)
            k4 = _mmax(base, ~mi & ~mj)
            t_lo = max(eps - x[i], x[j] - cap)
            t_hi = min(x[j] - eps, cap - x[i])
            if t_lo >= t_hi:
                continue
            tbest, gbest, lbest = _pair_min(
                a, b, x[i], x[j], k1, k2, k3, k4, t_lo, t_hi
            )
            if tbest is None or tbest == 0.0:
                continue
            local0 = max(k1 + ci + cj, k2 + ci, k3 + cj)
            better_max = gbest < delta - 1e-15 * (1.0 + delta)
            # A move that holds the max but tightens the pair's own paths is a
            # plateau step; without it the descent stalls whenever some other
            # path is the binding one.
            sideways = (
                gbest <= delta + 1e-15 * (1.0 + delta)
                and lbest < local0 - 1e-12 * (1.0 + abs(local0))
            )
            if not (better_max or sideways):
                continue
            x[i] += tbest
            x[j] -= tbest
            costs = costs + (a / x[i] - ci) * mi + (b / x[j] - cj) * mj
            delta = float(costs.max())
            moved = True
        if not moved:
            break
        if before - delta <= 1e-14 * (1.0 + delta):
            stale += 1
            if stale >= 5:  # plateau churn cap
                break
        else:
            stale = 0
    # Refresh to kill accumulated drift.
    costs = m @ (w / x)
    return x, float(costs.max())


def _mmax(values: np.ndarray, mask: np.ndarray) -> float:
    return float(values[mask].max()) if mask.any() else -math.inf


def _sqp_polish(x0, delta0, w, m, total, cap):
    """Epigraph SQP from the descent incumbent: min z s.t. path costs <= z."""
    from scipy.optimize import minimize

    n = len(x0)
    y0 = np.concatenate([x0, [delta0]])

    def cons_f(y):
        return y[-1] - m @ (w / y[:n])

    def cons_jac(y):
        jac = np.empty((m.shape[0], n + 1))
        jac[:, :n] = m * (w / y[:n] ** 2)[None, :]
        jac[:, n] = 1.0
        return jac

    lo = 1e-9 * total / n
    with warnings.catch_warnings():
        # SLSQP steps slightly outside the bounds and clips; that is routine.
        warnings.filterwarnings("ignore", message=".*outside bounds.*")
        res = minimize(
            lambda y: y[-1],
            y0,
            jac=lambda y: np.eye(n + 1)[-1],
            constraints=[
                {"type": "ineq", "fun": cons_f, "jac": cons_jac},
                {
                    "type": "eq",
                    "fun": lambda y: y[:n].sum() - total,
                    "jac": lambda y: np.concatenate([np.ones(n), [0.0]]),
                },
            ],
            bounds=[(lo, cap if math.isfinite(cap) else None)] * n
            + [(0.0, None)],
            method="SLSQP",
            options={"maxiter": 200, "ftol": 1e-14},
        )
    x = np.clip(res.x[:n], lo, cap)
    slack = total - x.sum()
    if slack < 0:  # never report a point that overspends the capacity
        x = np.clip(x * (total / x.sum()), lo, cap)
    elif slack > 0:  # give leftover capacity back where the cap allows
        room = cap - x
        scale = x * (room > 0)
        if scale.sum() > 0:
            x = np.minimum(x + slack * scale / scale.sum(), cap)
    delta = float((m @ (w / x)).max())
    if math.isfinite(delta) and delta < delta0:
        return x, delta
    return x0, delta0


def _pair_min(a, b, xi, xj, k1, k2, k3, k4, t_lo, t_hi):
    """Exact minimizer of the pairwise exchange objective on [t_lo, t_hi].

    g(t) = max(k1 + a/(xi+t) + b/(xj-t), k2 + a/(xi+t), k3 + b/(xj-t), k4).
    Returns (t, g(t), local(t)) where local omits the constant k4 branch;
    ties in g break toward smaller local, so plateau regions still yield the
    point that tightens this pair's own paths.
    """
    s = xi + xj
    cands = [t_lo, t_hi, 0.0]
    ra, rb = math.sqrt(a), math.sqrt(b)
    cands.append((ra * xj - rb * xi) / (ra + rb))  # interior min of curve 1
    if k2 > k1:
        cands.append(xj - b / (k2 - k1))
    if k3 > k1:
        cands.append(a / (k3 - k1) - xi)
    # curve1 = k4 and curve2 = curve3 reduce to quadratics in u = xi + t.
    for aa, bb, cc in (
        (k4 - k1, b - a - (k4 - k1) * s, a * s),
        (k2 - k3, a + b - (k2 - k3) * s, -a * s),
    ):
        if not (math.isfinite(aa) and math.isfinite(bb) and math.isfinite(cc)):
            continue
        if abs(aa) < 1e-300:
            if abs(bb) > 0:
                cands.append(-cc / bb - xi)
            continue
        disc = bb * bb - 4 * aa * cc
        if disc >= 0:
            r = math.sqrt(disc)
            cands.append((-bb + r) / (2 * aa) - xi)
            cands.append((-bb - r) / (2 * aa) - xi)
    if k4 > k2:
        cands.append(a / (k4 - k2) - xi)
    if k4 > k3:
        cands.append(xj - b / (k4 - k3))
    tbest, gbest, lbest = None, math.inf, math.inf
    for t in cands:
        if not (t_lo <= t <= t_hi) or not math.isfinite(t):
            continue
        u, v = xi + t, xj - t
        if u <= 0 or v <= 0:
            continue
        local = max(k1 + a / u + b / v, k2 + a / u, k3 + b / v)
        val = max(local, k4)
        if val < gbest or (val == gbest and local < lbest):
            tbest, gbest, lbest = t, val, local
    return tbest, gbest, lbest
