import math

import pytest

from spdalloc import (
    ZeroShare,
    compute_mapping,
    compute_weights,
    continuous_cost,
    gen_random_spd,
    leaves,
    numeric_continuous_min,
    optimal_delta,
    parse_tree,
    solve_capped,
)


def test_effective_weights():
    ann = compute_weights(parse_tree("s(a:1, b:4)"))
    assert ann.weight == 9.0  # (sqrt(1) + sqrt(4))^2
    assert compute_weights(parse_tree("p(a:2, b:3)")).weight == 5.0
    mixed = compute_weights(parse_tree("s(p(a:2, b:2), c:1)"))
    assert abs(mixed.weight - (math.sqrt(4.0) + 1.0) ** 2) < 1e-12


def test_closed_form_examples():
    t = parse_tree("s(a:1, b:4)")
    m = compute_mapping(compute_weights(t), 1.0)
    assert abs(m.shares["a"] - 1.0 / 3.0) < 1e-12
    assert abs(m.shares["b"] - 2.0 / 3.0) < 1e-12
    assert abs(optimal_delta(t, 1.0) - 9.0) < 1e-12

    t2 = parse_tree("p(a:2, b:3)")
    m2 = compute_mapping(compute_weights(t2), 1.0)
    assert abs(m2.shares["a"] - 0.4) < 1e-12
    assert abs(m2.shares["b"] - 0.6) < 1e-12
    assert abs(optimal_delta(t2, 1.0) - 5.0) < 1e-12


def test_mapping_exhausts_capacity():
    for seed in range(20):
        t = gen_random_spd(3 + seed % 7, seed)
        for c in (1.0, 2.5, 4.0):
            m = compute_mapping(compute_weights(t), c)
            assert abs(sum(m.shares.values()) - c) < 1e-9 * c
            assert all(x > 0 for x in m.shares.values())


def test_delta_scales_inversely_with_capacity():
    for seed in range(20):
        t = gen_random_spd(5, seed)
        m1 = compute_mapping(compute_weights(t), 2.0)
        m2 = compute_mapping(compute_weights(t), 4.0)
        for lf in leaves(t):
            assert abs(m2.shares[lf.id] - 2.0 * m1.shares[lf.id]) <= 1e-12 * m2.shares[lf.id]
        d1, d2 = optimal_delta(t, 2.0), optimal_delta(t, 4.0)
        assert abs(d2 - d1 / 2.0) <= 1e-12 * d1


def test_continuous_cost_matches_delta_at_optimum():
    for seed in range(15):
        t = gen_random_spd(6, seed)
        m = compute_mapping(compute_weights(t), 3.0)
        d = continuous_cost(t, m.shares).total_cost
        assert abs(d - optimal_delta(t, 3.0)) <= 1e-9 * d


def test_continuous_cost_rejects_bad_shares():
    t = parse_tree("s(a:1, b:1)")
    with pytest.raises(ZeroShare):
        continuous_cost(t, {"a": 0.0, "b": 1.0})
    with pytest.raises(ZeroShare):
        continuous_cost(t, {"a": 1.0})


def test_capped_no_pin_when_under_unit():
    t = parse_tree("p(a:2, b:3)")
    r = solve_capped(t, 1.0)
    assert r.fixed == ()
    assert abs(r.shares["a"] - 0.4) < 1e-12
    assert abs(r.shares["b"] - 0.6) < 1e-12


def test_capped_pins_only_the_oversized_share():
    r = solve_capped(parse_tree("p(a:4, b:1, c:1)"), 3.0)
    assert r.fixed == ("a",)
    assert r.shares["a"] == 1.0
    assert abs(r.shares["b"] - 1.0) < 1e-12
    assert abs(r.shares["c"] - 1.0) < 1e-12
    assert abs(r.total() - 3.0) < 1e-12


def test_capped_residual_is_exact_not_proportional():
    # after pinning 'a', redistributing the remainder proportionally is NOT
    # optimal: the exact residual beats it
    t = parse_tree("p(s(a:81, b:1), d:1)")
    r = solve_capped(t, 1.5)
    assert r.fixed == ("a",)
    d = continuous_cost(t, r.shares).total_cost
    assert abs(d - 83.04935264588079) < 1e-9
    assert abs(r.shares["b"] - 0.4879589669498838) < 1e-9
    # re-solving the leftover capacity while ignoring the pinned cost would
    # split 0.25/0.25 and land on 85, strictly worse
    naive = {"a": 1.0, "b": 0.25, "d": 0.25}
    assert abs(continuous_cost(t, naive).total_cost - 85.0) < 1e-12
    assert d < 85.0 - 1.9


def test_capped_handles_nested_pins_regression():
    # three pins across sibling subtrees used to break the residual bracketing
    t = gen_random_spd(8, 1, edge_weight_range=(0.0, 0.0))
    r = solve_capped(t, 6)
    assert r.fixed == ("t3", "t5", "t8")
    assert abs(r.total() - 6.0) < 1e-9
    assert max(r.shares.values()) <= 1.0 + 1e-12
    d = continuous_cost(t, r.shares).total_cost
    assert abs(d - 6.731570148207236) < 1e-9


def test_capped_matches_box_constrained_numeric():
    for seed in range(1, 16):
        t = gen_random_spd(6, seed)
        for c in (2, 4):
            r = solve_capped(t, c)
            d = continuous_cost(t, r.shares).total_cost
            _, d_num = numeric_continuous_min(t, c, box_cap=1.0, starts=4, seed=seed)
            assert abs(d - d_num) <= 1e-6 * max(1.0, d_num), (seed, c)


def test_capped_share_bounds():
    for seed in range(25):
        t = gen_random_spd(3 + seed % 10, seed)
        c = 2 + seed % 5
        r = solve_capped(t, c)
        assert abs(r.total() - c) < 1e-9 * c
        for leaf_id, x in r.shares.items():
            assert 0.0 < x <= 1.0 + 1e-12, (seed, leaf_id, x)
        for leaf_id in r.fixed:
            assert r.shares[leaf_id] == 1.0
