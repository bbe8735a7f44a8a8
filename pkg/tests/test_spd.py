import json

import pytest

from spdalloc import (
    DuplicateLeafId,
    FormatMismatch,
    Inner,
    Leaf,
    TreeError,
    TreeSyntaxError,
    expand,
    gen_random_spd,
    leaf_count,
    leaves,
    parallel,
    parse_tree,
    serial,
    serialize_tree,
    tree_from_dict,
    tree_to_dict,
    tree_weight_sum,
    validate_tree,
)


def test_parse_basic():
    t = parse_tree("s(a:1, b:4)[b=2]")
    assert t == serial(Leaf("a", 1.0), Leaf("b", 4.0), b=2.0)
    t2 = parse_tree("p(x:0.5, s(y:2, z:3))")
    assert t2 == parallel(Leaf("x", 0.5), serial(Leaf("y", 2.0), Leaf("z", 3.0)))
    # a bare leaf is itself a valid tree
    assert parse_tree("a:1") == Leaf("a", 1.0)


def test_parse_is_whitespace_insensitive():
    variants = [
        "s(a:1,b:4)[b=2]",
        " s( a : 1 , b : 4 ) [ b = 2 ] ",
        "s(\n  a:1,\n  b:4\n)[b=2]",
        "s\t(a:1,\tb:4)\t[b=2]",
    ]
    want = parse_tree(variants[0])
    for text in variants[1:]:
        assert parse_tree(text) == want


def test_serialize_example():
    t = serial(Leaf("a", 1.0), Leaf("b", 4.0), b=2.0)
    assert serialize_tree(t) == "s(a:1, b:4)[b=2]"
    assert serialize_tree(parallel(Leaf("a", 1.0), Leaf("b", 2.5))) == "p(a:1, b:2.5)"


def test_round_trip_random_trees():
    for seed in range(100):
        t = gen_random_spd(3 + seed % 8, seed)
        assert parse_tree(serialize_tree(t)) == t


def test_parse_errors():
    for text in [
        "",
        "q(a:1, b:2)",
        "s(a:1)",  # serial needs two children
        "s(a, b:2)",
        "s(a:1, b:2",
        "s(a:1, b:2))",
        "s(a:1, b:2)[b=]",
        "s(a:1, b:2)[c=1]",
        "s(a:-1, b:2)",
        "s(a:1, b:2) trailing",
        "s(a:1,, b:2)",
    ]:
        with pytest.raises((TreeSyntaxError, TreeError)):
            parse_tree(text)
    with pytest.raises(DuplicateLeafId):
        parse_tree("s(a:1, a:2)")


def test_validate_tree_rules():
    with pytest.raises(TreeError):
        validate_tree(Inner("p", (Leaf("a", 1.0),)))
    with pytest.raises(TreeError):
        validate_tree(Inner("x", (Leaf("a", 1.0), Leaf("b", 1.0))))
    with pytest.raises(TreeError):
        validate_tree(serial(Leaf("a", 1.0), Leaf("b", 1.0), b=-2.0))
    # parallel nodes carry no edge weight
    with pytest.raises(TreeError):
        validate_tree(Inner("p", (Leaf("a", 1.0), Leaf("b", 1.0)), edge_weight=1.0))


def test_tree_json_round_trip():
    for seed in (1, 5, 9):
        t = gen_random_spd(6, seed)
        d = tree_to_dict(t)
        json.dumps(d)  # must be plain JSON data
        assert tree_from_dict(d) == t


def test_tree_json_strict_keys():
    assert tree_from_dict({"leaf": "a", "w": 2}) == Leaf("a", 2.0)
    with pytest.raises(FormatMismatch):
        tree_from_dict({"leaf": "a"})
    with pytest.raises(FormatMismatch):
        tree_from_dict({"leaf": "a", "w": 2, "note": "x"})
    with pytest.raises((FormatMismatch, TreeError)):
        tree_from_dict({"op": "s", "children": []})
    ok = {
        "op": "s",
        "children": [{"leaf": "a", "w": 1}, {"leaf": "b", "w": 2}],
        "b": 1.5,
    }
    assert tree_from_dict(ok) == serial(Leaf("a", 1.0), Leaf("b", 2.0), b=1.5)


def test_expand_serial_wiring():
    g = expand(parse_tree("s(p(a:1, b:1), p(c:1, d:1))[b=3]"))
    assert set(g.edges) == {("a", "c"), ("a", "d"), ("b", "c"), ("b", "d")}
    assert all(g.edge_weight[e] == 3.0 for e in g.edges)


def test_expand_kary_serial_chains_pairwise():
    g = expand(parse_tree("s(a:1, b:1, c:1)[b=2]"))
    assert set(g.edges) == {("a", "b"), ("b", "c")}
    assert g.edge_weight[("a", "b")] == 2.0


def test_expand_parallel_is_disjoint():
    g = expand(parse_tree("p(a:1, b:1, c:2)"))
    assert g.edges == ()
    assert set(g.nodes) == {"a", "b", "c"}


def test_leaf_helpers():
    t = parse_tree("s(p(a:1, b:2), c:3)")
    assert leaf_count(t) == 3
    assert [lf.id for lf in leaves(t)] == ["a", "b", "c"]
    assert tree_weight_sum(t) == 6.0


def test_expand_leaf_count_matches():
    for seed in range(30):
        t = gen_random_spd(4 + seed % 9, seed)
        g = expand(t)
        assert len(g.nodes) == leaf_count(t)
