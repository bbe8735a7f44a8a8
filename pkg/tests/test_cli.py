import csv
import io
import json

import pytest

from spdalloc.cli import main


def run_cli(args, capsys):
    code = main(args)
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def body_of(text: str) -> str:
    """Strip the commented meta header gen prepends to instance files."""
    return "".join(
        line for line in text.splitlines(keepends=True) if not line.startswith("#")
    )


def test_gen_is_deterministic(tmp_path, capsys):
    a = tmp_path / "a.spd"
    b = tmp_path / "b.spd"
    assert main(["gen", "random", "--n", "9", "--seed", "4", "--out", str(a)]) == 0
    assert main(["gen", "random", "--n", "9", "--seed", "4", "--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()
    code, out, _ = run_cli(["gen", "parallel-outlier", "--n", "12"], capsys)
    assert code == 0
    assert out.startswith("# ")
    assert "p(" in body_of(out)


def test_gen_bad_params_exit_2(tmp_path, capsys):
    code, _, err = run_cli(["gen", "subsetsum", "--set", "1,2", "--x", "3", "--k", "5"], capsys)
    assert code == 2
    assert err.strip() != ""


def test_solve_cont_closed_form(tmp_path, capsys):
    inst = tmp_path / "t.spd"
    inst.write_text("s(a:1, b:4)[b=2]\n")
    code, out, _ = run_cli(
        ["solve", "--input", str(inst), "--c", "1", "--alg", "cont"], capsys
    )
    assert code == 0
    payload = json.loads(out)
    assert abs(payload["delta"] - 9.0) < 1e-12
    assert abs(payload["shares"]["a"] - 1 / 3) < 1e-12
    assert abs(payload["shares"]["b"] - 2 / 3) < 1e-12


def test_solve_reads_stdin(monkeypatch, capsys):
    monkeypatch.setattr("sys.stdin", io.StringIO("p(a:2, b:3)\n"))
    code, out, _ = run_cli(["solve", "--input", "-", "--c", "1", "--alg", "cont"], capsys)
    assert code == 0
    payload = json.loads(out)
    assert abs(payload["delta"] - 5.0) < 1e-12


def test_solve_disc_and_trivial(tmp_path, capsys):
    inst = tmp_path / "t.spd"
    inst.write_text("p(a:1, b:1, c:1, d:1)\n")
    code, out, _ = run_cli(
        ["solve", "--input", str(inst), "--c", "4", "--alg", "disc"], capsys
    )
    assert code == 0
    payload = json.loads(out)
    assert payload["overflow"] is False
    assert set(payload["allocation"]) == {"a", "b", "c", "d"}
    assert payload["d"] >= payload["delta"] - 1e-9

    code, out, _ = run_cli(
        ["solve", "--input", str(inst), "--c", "4", "--alg", "trivial"], capsys
    )
    payload = json.loads(out)
    assert payload["capacity"] == 1
    assert payload["d"] == 4.0  # all four tasks share one resource


def test_solve_rejects_raw_graph_for_tree_algorithms(tmp_path, capsys):
    inst = tmp_path / "g.json"
    inst.write_text(json.dumps({
        "nodes": [{"id": "a", "w": 1.0}, {"id": "b", "w": 1.0}],
        "edges": [{"u": "a", "v": "b", "b": 0.5}],
    }))
    code, _, err = run_cli(
        ["solve", "--input", str(inst), "--c", "2", "--alg", "cont"], capsys
    )
    assert code == 2
    assert "tree-recursive" in err
    # but load-independent baselines accept the raw graph
    code, out, _ = run_cli(
        ["solve", "--input", str(inst), "--c", "2", "--alg", "avg"], capsys
    )
    assert code == 0
    assert json.loads(out)["d"] > 0


def test_eval_accepts_bare_task_map(tmp_path, capsys):
    inst = tmp_path / "t.spd"
    inst.write_text("s(a:1, b:1)[b=5]\n")
    together = tmp_path / "alloc1.json"
    together.write_text(json.dumps({"a": 1, "b": 1}))
    apart = tmp_path / "alloc2.json"
    apart.write_text(json.dumps({"a": 1, "b": 2}))
    code, out, _ = run_cli(
        ["eval", "--input", str(inst), "--allocation", str(together)], capsys
    )
    assert code == 0
    assert json.loads(out)["d"] == 4.0
    code, out, _ = run_cli(
        ["eval", "--input", str(inst), "--allocation", str(apart)], capsys
    )
    assert json.loads(out)["d"] == 7.0


def test_eval_missing_task_exits_2(tmp_path, capsys):
    inst = tmp_path / "t.spd"
    inst.write_text("s(a:1, b:1)\n")
    alloc = tmp_path / "alloc.json"
    alloc.write_text(json.dumps({"a": 1}))
    code, _, err = run_cli(
        ["eval", "--input", str(inst), "--allocation", str(alloc)], capsys
    )
    assert code == 2
    assert "b" in err


def test_compare_with_oracle(tmp_path, capsys):
    inst = tmp_path / "o.spd"
    assert main(["gen", "parallel-outlier", "--n", "12", "--out", str(inst)]) == 0
    code, out, _ = run_cli(
        [
            "compare", "--input", str(inst), "--c", "2",
            "--algs", "avg,trivial", "--oracle",
        ],
        capsys,
    )
    assert code == 0
    result = json.loads(out)
    assert result["oracle"] == 10.0
    by_alg = {r["algorithm"]: r for r in result["rows"]}
    assert by_alg["avg"]["d"] == 16.0
    assert by_alg["avg"]["ratio_oracle"] == 1.6
    assert by_alg["trivial"]["d"] == 48.0  # outlier weight 4 times 12 co-located tasks
    assert all(r["ratio_oracle"] >= 1.0 for r in result["rows"])


def test_compare_rejects_continuous(tmp_path, capsys):
    inst = tmp_path / "t.spd"
    inst.write_text("p(a:1, b:1)\n")
    code, _, err = run_cli(
        ["compare", "--input", str(inst), "--c", "2", "--algs", "cont,avg"], capsys
    )
    assert code == 2
    assert "cont" in err


def test_oracle_size_limit_exits_3(tmp_path, capsys):
    inst = tmp_path / "big.spd"
    assert main(["gen", "parallel-outlier", "--n", "24", "--out", str(inst)]) == 0
    code, _, err = run_cli(
        ["compare", "--input", str(inst), "--c", "2", "--algs", "avg", "--oracle"],
        capsys,
    )
    assert code == 3
    assert err.strip() != ""


def test_bench_avg_counterexample_csv(tmp_path, capsys):
    out_file = tmp_path / "bench.csv"
    code = main([
        "bench", "--suite", "avg-counterexample", "--sizes", "12,24",
        "--out", str(out_file),
    ])
    assert code == 0
    rows = list(csv.DictReader(out_file.open()))
    assert [r["n"] for r in rows] == ["12", "24"]
    assert float(rows[0]["d"]) == 16.0
    assert float(rows[1]["d"]) == 64.0
    assert float(rows[0]["ratio"]) > 1.0
    assert list(rows[0]) == [
        "suite", "family", "n", "c", "seed", "gamma", "algorithm",
        "d", "delta", "ratio", "flag", "runtime_ms",
    ]


def test_bench_empty_sizes_writes_header_only(capsys):
    code, out, _ = run_cli(
        ["bench", "--suite", "disc-ratio", "--sizes", ""], capsys
    )
    assert code == 0
    assert out.splitlines() == [
        "suite,family,n,c,seed,gamma,algorithm,d,delta,ratio,flag,runtime_ms"
    ]


def test_bench_plot_renders_png(tmp_path):
    png = tmp_path / "fig.png"
    out_file = tmp_path / "bench.csv"
    code = main([
        "bench", "--suite", "greedy-worst", "--sizes", "12",
        "--plot", str(png), "--out", str(out_file),
    ])
    assert code == 0
    data = png.read_bytes()
    assert data[:8] == b"\x89PNG\r\n\x1a\n"
    assert len(data) > 1000


def test_json_output_is_canonical(tmp_path, capsys):
    inst = tmp_path / "t.spd"
    inst.write_text("p(a:2, b:3)\n")
    _, out, _ = run_cli(
        ["solve", "--input", str(inst), "--c", "1", "--alg", "cont"], capsys
    )
    assert out.endswith("\n") and not out.endswith("\n\n")
    payload = json.loads(out)
    assert out == json.dumps(payload, sort_keys=True) + "\n"


def test_table_format(tmp_path, capsys):
    inst = tmp_path / "t.spd"
    inst.write_text("p(a:2, b:3)\n")
    code, out, _ = run_cli(
        ["solve", "--input", str(inst), "--c", "1", "--alg", "cont", "--format", "table"],
        capsys,
    )
    assert code == 0
    assert "delta" in out
    with pytest.raises(json.JSONDecodeError):
        json.loads(out)
