"""End-to-end command line behavior: documents, exit codes, reports."""

import json

import pytest

from drcvar.cli import main

CRISP = {
    "variables": {"count": 2, "bounds": [[0, None], [0, None]]},
    "objective": {"sense": "max", "costs": [1.0, 1.0]},
    "rows": [
        {"coeffs": [1.0, 2.0], "sense": "<=", "rhs": 4.0},
        {"coeffs": [1.0, 0.0], "sense": "<=", "rhs": 3.0},
    ],
}

CVAR_OBJ = {
    "variables": {"count": 1, "bounds": [[1, 1]]},
    "objective": {
        "sense": "min",
        "cvar": {
            "marginals": [{"nominal": 5.0, "dev_lo": 2.0, "dev_hi": 2.0}],
            "deviation": {"norm": "linf", "budget": 2.0},
            "eps": 0.5,
            "ell": 2,
        },
    },
}


def write_doc(tmp_path, doc, name="model.json"):
    path = tmp_path / name
    path.write_text(json.dumps(doc))
    return str(path)


def test_solve_crisp(tmp_path, capsys):
    assert main(["solve", write_doc(tmp_path, CRISP)]) == 0
    out = capsys.readouterr().out
    assert "status: optimal" in out
    assert "objective: 3.5" in out
    assert "x1 = 3" in out and "x2 = 0.5" in out


def test_solve_cvar_objective(tmp_path, capsys):
    assert main(["solve", write_doc(tmp_path, CVAR_OBJ)]) == 0
    assert "objective: 7" in capsys.readouterr().out


def test_solve_infeasible_exit_2(tmp_path, capsys):
    doc = dict(CRISP, rows=CRISP["rows"] + [
        {"coeffs": [1.0, 1.0], "sense": ">=", "rhs": 100.0}])
    assert main(["solve", write_doc(tmp_path, doc)]) == 2
    assert "status: infeasible" in capsys.readouterr().out


def test_solve_unbounded_exit_3(tmp_path, capsys):
    doc = dict(CRISP, rows=[])
    assert main(["solve", write_doc(tmp_path, doc)]) == 3
    assert "status: unbounded" in capsys.readouterr().out


def test_schema_violation_exit_1(tmp_path, capsys):
    doc = json.loads(json.dumps(CVAR_OBJ))
    doc["objective"]["cvar"]["eps"] = 1.0
    assert main(["solve", write_doc(tmp_path, doc)]) == 1
    err = capsys.readouterr().err
    assert "error:" in err and "eps" in err


def test_malformed_json_exit_1(tmp_path, capsys):
    path = tmp_path / "broken.json"
    path.write_text('{"variables": {\n  "count": oops\n}}')
    assert main(["solve", str(path)]) == 1
    # parse errors point at the offending line and column
    assert f"{path}:2:" in capsys.readouterr().err


def test_missing_file_exit_1(tmp_path, capsys):
    assert main(["solve", str(tmp_path / "nope.json")]) == 1
    assert "error:" in capsys.readouterr().err


def test_marginal_count_mismatch_exit_1(tmp_path, capsys):
    doc = json.loads(json.dumps(CVAR_OBJ))
    doc["variables"]["count"] = 2
    doc["variables"]["bounds"] = [[1, 1], [0, 0]]
    assert main(["solve", write_doc(tmp_path, doc)]) == 1
    assert "marginals" in capsys.readouterr().err


def test_usage_errors_exit_1(capsys):
    assert main(["frobnicate"]) == 1
    assert main(["knapsack", "--eps-list", ""]) == 1
    assert main(["--help"]) == 0
    capsys.readouterr()


def test_export(tmp_path, capsys):
    assert main(["export", write_doc(tmp_path, CVAR_OBJ)]) == 0
    out = capsys.readouterr().out
    assert "min" in out and "x1" in out


def test_knapsack_csv(tmp_path):
    out = tmp_path / "knap.csv"
    argv = ["knapsack", "--n", "8", "--ell", "10", "--seed", "7",
            "--delta-list", "0,0.2", "--eps-list", "0,0.5",
            "--out", str(out)]
    assert main(argv) == 0
    lines = out.read_text().splitlines()
    assert lines[0].startswith("#") and "generator=PCG64 seed=7" in lines[0]
    assert lines[1] == "delta,epsilon,objective,status,solve_ms"
    rows = [line.split(",") for line in lines[2:]]
    assert len(rows) == 4
    assert all(r[3] == "optimal" for r in rows)
    # delta=0 removes the uncertainty: objective constant in epsilon
    base = [r for r in rows if r[0] == "0"]
    assert base[0][2] == base[1][2]
    # reruns are identical apart from wall-clock timings
    out2 = tmp_path / "knap2.csv"
    assert main(argv[:-1] + [str(out2)]) == 0
    strip = [line.rsplit(",", 1)[0] for line in lines[1:]]
    strip2 = [line.rsplit(",", 1)[0]
              for line in out2.read_text().splitlines()[1:]]
    assert strip == strip2


def test_portfolio_csv(tmp_path):
    out = tmp_path / "port.csv"
    assert main(["portfolio", "--delta-list", "0", "--eps-list", "0,0.4",
                 "--out", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert lines[0].startswith("# portfolio sweep:")
    assert lines[1] == ("delta_bar,epsilon,objective,status,solve_ms,"
                        "cut_count,val,gap")
    rows = [line.split(",") for line in lines[2:]]
    assert len(rows) == 2
    for r in rows:
        assert r[3] == "optimal"
        # no uncertainty: the nominal portfolio is optimal, gap vanishes
        assert abs(float(r[7])) <= 1e-9


def test_verify(capsys):
    assert main(["verify", "--trials", "10", "--seed", "2"]) == 0
    out = capsys.readouterr().out
    assert "verify: generator=PCG64 seed=2 trials=10" in out
    assert out.rstrip().endswith("PASS")
