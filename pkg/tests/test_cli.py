"""CLI tests: exit codes, JSON round trips, deterministic output."""

import json

from afkit.cli import main


def write(tmp_path, name, data):
    path = tmp_path / name
    path.write_text(json.dumps(data))
    return str(path)


def run(capsys, argv):
    code = main(argv)
    captured = capsys.readouterr()
    return code, captured.out, captured.err


Z6 = {"generators": 1, "relations": [[6]]}
Z2 = {"generators": 1, "relations": [[2]]}
Z3 = {"generators": 1, "relations": [[3]]}
UHF2 = {
    "levels": [
        {"l": 1, "w": [1], "m": [[2]]},
        {"l": 1, "w": [2], "m": [[2]]},
        {"l": 1, "w": [4]},
    ],
    "tail": [[[2]]],
}


def test_group_reports_factors(tmp_path, capsys):
    path = write(tmp_path, "g.json", Z6)
    code, out, _ = run(capsys, ["--format", "json", "group", path])
    assert code == 0
    report = json.loads(out)
    assert report["invariant_factors"] == [6]
    assert report["divisibility"]["5"]["uniquely_divisible"] is True


def test_group_text_format(tmp_path, capsys):
    path = write(tmp_path, "g.json", Z6)
    code, out, _ = run(capsys, ["group", path])
    assert code == 0
    assert "invariant_factors" in out


def test_group_parse_error(tmp_path, capsys):
    path = tmp_path / "bad.json"
    path.write_text("{not json")
    code, _, err = run(capsys, ["group", str(path)])
    assert code == 2
    assert "line" in err


def test_group_missing_field(tmp_path, capsys):
    path = write(tmp_path, "g.json", {"relations": []})
    code, _, err = run(capsys, ["group", path])
    assert code == 2
    assert "generators" in err


def test_limits_fg(tmp_path, capsys):
    path = write(tmp_path, "s.json", {"kind": "stationary", "matrices": [[[1, 0], [0, 0]]]})
    code, out, _ = run(capsys, ["--format", "json", "limits", path, "--depth", "5"])
    assert code == 0
    assert json.loads(out)["limit_invariant_factors"] == [0]


def test_limits_depth_exceeded(tmp_path, capsys):
    path = write(tmp_path, "s.json", {"kind": "stationary", "matrices": [[[2]]]})
    code, out, _ = run(capsys, ["--format", "json", "limits", path, "--depth", "5"])
    assert code == 3


def test_schreier(tmp_path, capsys):
    path = write(tmp_path, "t.json", Z2)
    code, out, _ = run(
        capsys,
        ["--format", "json", "schreier", "--target", path, "--images", "[[1],[1]]",
         "--word-bound", "3", "--gen-bound", "2"],
    )
    assert code == 0
    report = json.loads(out)
    assert report["count"] == 3
    assert set(report["generators"]) == {"x0^2", "x0.x1", "x1.x0^-1"}


def test_rordam_pass_and_fail(tmp_path, capsys):
    g = write(tmp_path, "g.json", Z2)
    code, out, _ = run(capsys, ["--format", "json", "rordam", "--group", g,
                                "--width", "6", "--depth", "4"])
    assert code == 0
    assert json.loads(out)["pass"] is True


def test_diagram_validate_good(tmp_path, capsys):
    path = write(tmp_path, "d.json", UHF2)
    code, out, _ = run(capsys, ["--format", "json", "diagram", "validate", path])
    assert code == 0
    assert json.loads(out)["valid"] is True


def test_diagram_validate_bad(tmp_path, capsys):
    bad = {
        "levels": [
            {"l": 1, "w": [1], "m": [[2]]},
            {"l": 1, "w": [5]},
        ]
    }
    path = write(tmp_path, "d.json", bad)
    code, out, _ = run(capsys, ["--format", "json", "diagram", "validate", path])
    assert code == 1
    report = json.loads(out)
    assert any("condition 5" in v for v in report["violations"])


def test_diagram_k0(tmp_path, capsys):
    path = write(tmp_path, "d.json", UHF2)
    code, out, _ = run(capsys, ["--format", "json", "diagram", "k0", path])
    assert code == 0
    report = json.loads(out)
    assert report["levels"][2]["multimatrix_dims"] == [4]


def test_diagram_dot_deterministic(tmp_path, capsys):
    path = write(tmp_path, "d.json", UHF2)
    code1, out1, _ = run(capsys, ["diagram", "dot", path])
    code2, out2, _ = run(capsys, ["diagram", "dot", path])
    assert code1 == code2 == 0
    assert out1 == out2
    assert "digraph" in out1


def test_diagram_telescope_roundtrip(tmp_path, capsys):
    path = write(tmp_path, "d.json", UHF2)
    code, out, _ = run(capsys, ["diagram", "telescope", path, "--cuts", "0,2"])
    assert code == 0
    emitted = json.loads(out)
    assert emitted["levels"][0]["m"] == [[4]]
    # emitted JSON re-parses and revalidates
    path2 = write(tmp_path, "d2.json", emitted)
    code2, out2, _ = run(capsys, ["--format", "json", "diagram", "validate", path2])
    assert code2 == 0 and json.loads(out2)["valid"]


def test_ehs_simplicial(tmp_path, capsys):
    system = {
        "kind": "stationary",
        "matrices": [[[1]]],
        "cone": "simplicial",
        "unit": [1],
    }
    path = write(tmp_path, "s.json", system)
    code, out, _ = run(capsys, ["--format", "json", "ehs", "--system", path, "--depth", "3"])
    assert code == 0
    report = json.loads(out)
    assert len(report["diagram"]["levels"]) == 4
    assert report["coverage"][0]["appears_literally"] is True


def test_ehs_with_endo(tmp_path, capsys):
    system = {
        "kind": "stationary",
        "matrices": [[[1]]],
        "cone": "simplicial",
        "unit": [1],
    }
    s = write(tmp_path, "s.json", system)
    e = write(tmp_path, "e.json", {"kind": "same_stage", "matrix": [[3]]})
    code, out, _ = run(capsys, ["--format", "json", "ehs", "--system", s, "--depth", "3",
                                "--endo", e])
    assert code == 0
    report = json.loads(out)
    assert "q" in report
    assert report["q"][0] == [[3]]


def test_eplag_tree_and_fingerprint(tmp_path, capsys):
    tree = write(tmp_path, "t.json", {"children": [{"children": []}]})
    code, out, _ = run(capsys, ["eplag", "tree", "--tree", tree, "--p", ""])
    assert code == 0
    graph = json.loads(out)
    gpath = write(tmp_path, "g.json", graph)
    code2, out2, _ = run(capsys, ["--format", "json", "eplag", "fingerprint",
                                  "--graph", gpath, "--prime-bound", "12", "--bound", "3"])
    assert code2 == 0
    report = json.loads(out2)
    assert report["p_divisible_sample"] is True
    assert len(report["fingerprint"]) == 2


def test_eplag_member(tmp_path, capsys):
    graph = {
        "vertices": {"v": 3},
        "edges": [],
        "P": [5],
    }
    g = write(tmp_path, "g.json", graph)
    t = write(tmp_path, "x.json", {"v": "1/15"})
    code, out, _ = run(capsys, ["--format", "json", "eplag", "member",
                                "--graph", g, "--target", t, "--bound", "2"])
    assert code == 0
    report = json.loads(out)
    assert report["status"] == "member"


def test_pipeline_cli(tmp_path, capsys):
    g = write(tmp_path, "z2.json", Z2)
    diagram_out = str(tmp_path / "d.json")
    dot_out = str(tmp_path / "d.dot")
    code, out, _ = run(capsys, ["--format", "json", "pipeline", "--group", g,
                                "--prime", "3", "--depth", "3",
                                "--emit-diagram", diagram_out, "--dot", dot_out])
    assert code == 0
    report = json.loads(out)
    assert report["all_passed"] is True
    assert report["stages"]["pv"]["cokernel_invariant_factors"] == [2]
    assert report["absorption"]["d_3"] is True
    emitted = json.loads(open(diagram_out).read())
    assert emitted["levels"]
    assert open(dot_out).read().startswith("digraph")


def test_pipeline_deterministic(tmp_path, capsys):
    g = write(tmp_path, "z3.json", Z3)
    argv = ["--format", "json", "pipeline", "--group", g, "--prime", "2", "--depth", "3"]
    code1, out1, _ = run(capsys, argv)
    code2, out2, _ = run(capsys, argv)
    assert code1 == code2 == 0
    assert out1 == out2


def test_invariant_with_compare(tmp_path, capsys):
    a = write(tmp_path, "a.json", Z3)
    b = write(tmp_path, "b.json", {"generators": 2, "relations": [[3, 0], [0, 1]]})
    code, out, _ = run(capsys, ["--format", "json", "invariant", a, "--prime", "2",
                                "--compare", b])
    assert code == 0
    report = json.loads(out)
    assert report["o_infty_standard_absorbing"] is True
    assert report["d_2_absorbing"] is True
    assert report["comparison"]["kp_isomorphic"] is True
    assert report["comparison"]["equivalences"]["automorphisms_conjugate"] is True
