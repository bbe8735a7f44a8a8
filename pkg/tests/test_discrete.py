import math

import pytest

from spdalloc import (
    MismatchedReport,
    allocate,
    approximation_diagnostics,
    block_size,
    continuous_cost,
    expand,
    gen_random_spd,
    pack,
    parse_tree,
    solve_capped,
    streaming_cost,
)


def test_block_size_formula():
    assert block_size(4, 2, 2.0, 1.0) == math.ceil(2.0 * 4.0)  # n^(2/2) = n
    assert block_size(4, 2, 2.0, 0.5) == 16
    assert block_size(9, 3, 1.0, 1.0) == math.ceil(9.0 ** (2.0 / 3.0))
    assert block_size(10, 4, 0.25, 0.8) == math.ceil(0.25 * 10.0 ** 0.5 / 0.8)


def test_allocate_unit_parallel():
    report = allocate(parse_tree("p(a:1, b:1, c:1, d:1)"), 2)
    g = expand(parse_tree("p(a:1, b:1, c:1, d:1)"))
    d = streaming_cost(g, report.allocation).total_cost
    assert d == 4.0
    assert not report.overflow
    assert report.resources_used <= 2


def test_allocate_covers_everything():
    for seed in range(30):
        n = 4 + seed % 12
        t = gen_random_spd(n, seed)
        c = 2 + seed % 5
        report = allocate(t, c)
        g = expand(t)
        assert set(report.allocation.assignment) == set(g.nodes)
        used = set(report.allocation.assignment.values())
        assert len(used) <= c
        assert all(1 <= r <= c for r in used)
        assert report.resources_used == len(used)


def test_order_is_share_descending():
    t = parse_tree("p(big:8, mid:2, small:1)")
    report = allocate(t, 2)
    # the largest share opens block one
    assert report.allocation.assignment["big"] == 1
    assert report.group_boundaries[0][0] == 1
    assert report.group_boundaries[0][1] == 0


def test_tiny_gamma_overflows_to_last_resource():
    t = parse_tree("p(a:1, b:1, c:1, d:1, e:1, f:1)")
    report = allocate(t, 2, gamma=0.01)
    assert report.overflow
    # the overflow tail lands on the last resource
    assert max(report.allocation.assignment.values()) == 2
    assert set(report.allocation.assignment) == {"a", "b", "c", "d", "e", "f"}


def test_pack_groups_travel_together():
    shares = {"a": 0.9, "b": 0.5, "c": 0.4, "d": 0.2}
    assignment, boundaries, overflow = pack(
        ["a", "b", "c", "d"], shares, 3, 0.8, groups=[["b", "d"]]
    )
    assert assignment["b"] == assignment["d"]
    assert not overflow
    assert set(assignment) == {"a", "b", "c", "d"}
    for r, start, size in boundaries:
        assert size >= 1


def test_diagnostics_fields_consistent():
    t = gen_random_spd(10, 2, edge_weight_range=(0.0, 0.0))
    c = 3
    report = allocate(t, c)
    diag = approximation_diagnostics(t, c, report)
    shares = solve_capped(t, c).shares
    assert abs(diag.delta - continuous_cost(t, shares).total_cost) < 1e-9
    assert diag.d >= diag.d_hat - 1e-12
    assert abs(diag.ratio_d - diag.d / diag.delta) < 1e-12
    assert abs(diag.ratio_hat - diag.d_hat / diag.delta) < 1e-12
    n = 10
    assert abs(diag.bound - (report.gamma * n ** (2.0 / c) + 1.0)) < 1e-12
    assert diag.overflow == report.overflow


def test_diagnostics_reject_doctored_report():
    t = parse_tree("p(a:1, b:1, c:1)")
    report = allocate(t, 2)
    report.allocation.assignment.pop("c")
    with pytest.raises(MismatchedReport):
        approximation_diagnostics(t, 2, report)


def test_zero_transfer_bound_holds():
    violations = 0
    for seed in range(40):
        n = 5 + seed % 16
        t = gen_random_spd(n, seed, edge_weight_range=(0.0, 0.0))
        c = 2 + seed % 6
        report = allocate(t, c)
        diag = approximation_diagnostics(t, c, report)
        if report.overflow:
            continue
        if diag.d > diag.bound * diag.delta + 1e-9:
            violations += 1
    assert violations == 0
