import pytest

from spdalloc import (
    Allocation,
    GreedyPolicy,
    balanced_avg,
    expand,
    gen_greedy_worstcase,
    gen_parallel_outlier,
    gen_random_spd,
    greedy_collocate,
    greedy_trace,
    parse_tree,
    streaming_cost,
    trivial_single,
)


def test_trivial_single():
    g = expand(parse_tree("s(a:1, b:1)[b=9]"))
    alloc = trivial_single(g)
    assert alloc.resource_count == 1
    assert set(alloc.assignment.values()) == {1}
    assert streaming_cost(g, alloc).total_cost == 4.0  # no transfer, 2x slowdown


def test_balanced_avg_spreads_by_weight():
    g = expand(parse_tree("p(a:1, b:1, c:1, d:1)"))
    alloc = balanced_avg(g, 2)
    sizes = alloc.resource_sizes()
    assert sizes[1] == 2 and sizes[2] == 2
    assert streaming_cost(g, alloc).total_cost == 2.0


def test_balanced_avg_outlier_blowup():
    for n, want in ((12, 16.0), (24, 64.0), (48, 256.0)):
        g = expand(gen_parallel_outlier(n))
        alloc = balanced_avg(g, 2)
        assert streaming_cost(g, alloc).total_cost == want  # n^2/9 exactly
    # at n=12 the outlier v1 ends up sharing with a third of the tasks
    g = expand(gen_parallel_outlier(12))
    alloc = balanced_avg(g, 2)
    assert alloc.resource_sizes()[alloc.assignment["v1"]] == 4


def test_greedy_trace_invariants():
    for seed in range(10):
        t = gen_random_spd(6, seed)
        g = expand(t)
        for policy in GreedyPolicy:
            trace = greedy_trace(t, 3, policy)
            assert set(trace.allocation.assignment) == set(g.nodes)
            assert trace.allocation.resource_count == 3
            got = streaming_cost(g, trace.allocation).total_cost
            assert abs(got - trace.cost) < 1e-12 * max(1.0, got)
            assert set(trace.retained) <= set(g.edges)
            # retained edges really are collocated
            for u, v in trace.retained:
                assert trace.allocation.assignment[u] == trace.allocation.assignment[v]


def test_policy_tie_handling_differs():
    # merging the chain neither helps nor hurts when b equals the slowdown;
    # keep-unless-worse retains the edge, keep-if-improves does not
    t = parse_tree("s(a:1, b:1)[b=2]")
    drop = greedy_trace(t, 2, GreedyPolicy.RETAIN_IF_IMPROVES)
    keep = greedy_trace(t, 2, GreedyPolicy.RETAIN_UNLESS_WORSE)
    assert drop.cost == keep.cost == 4.0
    assert drop.retained == []
    assert keep.retained == [("a", "b")]


def test_greedy_collocate_returns_allocation():
    t = gen_random_spd(7, 4)
    alloc = greedy_collocate(t, 3, GreedyPolicy.RETAIN_UNLESS_WORSE)
    assert isinstance(alloc, Allocation)
    assert set(alloc.assignment) == set(expand(t).nodes)
    trace = greedy_trace(t, 3, GreedyPolicy.RETAIN_UNLESS_WORSE)
    assert alloc.assignment == trace.allocation.assignment


def test_policies_diverge_on_trap_instance():
    g = gen_greedy_worstcase(12)
    t = parse_tree(g.meta["tree"])
    c, gamma = g.meta["c"], g.meta["gamma"]
    costs = {
        policy: greedy_trace(t, c, policy, gamma, graph=g).cost
        for policy in GreedyPolicy
    }
    assert costs[GreedyPolicy.RETAIN_UNLESS_WORSE] == 59.0
    assert costs[GreedyPolicy.RETAIN_IF_IMPROVES] == 61.0
    assert costs[GreedyPolicy.RETAIN_UNLESS_PATH_WORSE] == 65.0
    repaired = streaming_cost(g, Allocation(g.meta["repaired_allocation"], c))
    assert repaired.total_cost == 49.0


def test_greedy_override_graph_must_match_tree():
    t = parse_tree("s(a:1, b:1)")
    other = expand(parse_tree("s(x:1, y:1)"))
    with pytest.raises(Exception):
        greedy_trace(t, 2, GreedyPolicy.RETAIN_UNLESS_WORSE, graph=other)
