import io
import json

import pytest

from weylkit.cli import main
from weylkit.scenarios import BUILTINS, CHECKS


def run(argv):
    out, err = io.StringIO(), io.StringIO()
    code = main(argv, out, err)
    return code, out.getvalue(), err.getvalue()


def test_list_scenarios():
    code, out, _ = run(["list-scenarios"])
    assert code == 0
    for name in BUILTINS:
        assert name in out


@pytest.mark.parametrize("name,checks", [
    ("biharmonic-x1x3", {"adapted_parallel_volumes", "mixed_faraday", "einstein_weyl_defect", "scalar_flat"}),
    ("flat-product", None),
    ("hyperhermitian-rezw", {"nijenhuis_zero", "asd_faraday", "holonomy_rank_2", "rd_on_F"}),
])
def test_builtin_checks_pass(name, checks):
    code, out, _ = run(["check", name])
    assert code == 0
    rep = json.loads(out)
    assert rep["pass"] is True
    names = {c["name"] for c in rep["checks"]}
    if checks:
        assert names == checks
    assert [c["name"] for c in rep["checks"]] == sorted(names)
    if name == "flat-product":
        assert all(c["max_defect"] == 0.0 for c in rep["checks"])
    assert set(rep["conventions"]) >= {"orientation", "laplacian", "wedge"}


def test_determinism_modulo_timestamp():
    a = json.loads(run(["check", "biharmonic-x1x3", "--seed", "3", "--samples", "20"])[1])
    b = json.loads(run(["check", "biharmonic-x1x3", "--seed", "3", "--samples", "20"])[1])
    assert "timestamp" in a
    a.pop("timestamp"), b.pop("timestamp")
    assert a == b
    c = run(["check", "biharmonic-x1x3", "--seed", "3", "--samples", "20", "--no-timestamp"])[1]
    d = run(["check", "biharmonic-x1x3", "--seed", "3", "--samples", "20", "--no-timestamp"])[1]
    assert c == d


def test_check_failure_exit_code(tmp_path):
    cfg = {"kind": "conformal_product", "dims": [2, 2], "box": [[-1, 1]] * 4, "f1": "0", "f2": "2*x1^2",
           "checks": [{"name": "einstein_weyl_defect", "tol": 1e-8}, "mixed_faraday"], "samples": 10}
    p = tmp_path / "bad.json"
    p.write_text(json.dumps(cfg))
    code, out, _ = run(["check", str(p), "--csv", str(tmp_path / "r.csv")])
    assert code == 1
    rep = json.loads(out)
    assert rep["pass"] is False
    rows = (tmp_path / "r.csv").read_text().splitlines()
    assert rows[0] == "name,points_evaluated,max_defect,tolerance,pass"
    assert rows[1].startswith("einstein_weyl_defect,10,") and rows[1].endswith(",false")
    assert rows[2].endswith(",true")


def test_tol_override(tmp_path):
    code, out, _ = run(["check", "biharmonic-x1x3", "--tol", "1e-30", "--samples", "5"])
    assert code == 1
    assert all(c["tolerance"] == 1e-30 for c in json.loads(out)["checks"])


@pytest.mark.parametrize("cfg,fragment", [
    ({"kind": "nope"}, "unknown kind"),
    ({"kind": "weyl_chart", "box": [[-1, 1]] * 2, "g": [["1", "0"], ["0", "1"]], "checks": ["bogus"]}, "unknown check"),
    ({"kind": "weyl_chart", "box": [[-1, 1]] * 2, "g": [["1", "0"], ["0", "1 +"]]}, "offset"),
    ({"kind": "weyl_chart", "box": [[1, -1]] * 2, "g": [["1", "0"], ["0", "1"]]}, "box"),
    ({"kind": "weyl_chart", "box": [[-1, 1]] * 2, "g": [["1", "0"], ["0", "ln(x1)"]]}, "singular"),
    ({"kind": "weyl_chart", "box": [[-1, 1]] * 2, "g": [["1", "0"], ["0", "1/x1"]]}, "singular"),
    ({"kind": "weyl_chart", "box": [[-1, 1]] * 2, "g": [["1", "0"], ["0", "x1"]]}, "positive definite"),
    ({"kind": "weyl_chart", "box": [[-1, 1]] * 2, "g": [["1", "x1"], ["0", "1"]]}, "differ"),
    ({"kind": "conformal_product", "dims": [2, 2], "box": [[-1, 1]] * 3}, "axes"),
    ({"kind": "hyperhermitian", "box": [[-1, 1]] * 4, "f": "x1*x3",
      "H": {"terms": [[1, 1, -1, 0]], "exponential": True}}, "differs"),
    ({"kind": "toda_solve", "grid": {"sizes": [3, 9, 9, 9], "box": [[-1, 1]] * 4}, "boundary": "0"}, "grid size"),
    ({"kind": "toda_solve", "grid": {"sizes": [9] * 4, "box": [[-1, 1]] * 4}, "boundary": "0",
      "checks": ["solution_error"]}, "reference"),
])
def test_config_errors(tmp_path, cfg, fragment):
    p = tmp_path / "c.json"
    p.write_text(json.dumps(cfg))
    code, out, err = run(["check", str(p)])
    assert code == 2, err
    assert out == ""
    msg = json.loads(err)
    assert msg["error"] == "config" and fragment in msg["message"]


def test_missing_file_and_bad_json(tmp_path):
    assert run(["check", str(tmp_path / "missing.json")])[0] == 2
    p = tmp_path / "x.json"
    p.write_text("{not json")
    assert run(["check", str(p)])[0] == 2
    assert run(["solve-toda", "biharmonic-x1x3"])[0] == 2


def test_math_error_exit_code(tmp_path):
    # the metric itself is finite on the box but its derivatives overflow
    cfg = {"kind": "weyl_chart", "box": [[1.0, 1.0135], [0, 1]], "g": [["exp(700*x1)", "0"], ["0", "x2^2+1"]],
           "checks": ["einstein_weyl_defect"], "samples": 50}
    p = tmp_path / "m.json"
    p.write_text(json.dumps(cfg))
    code, out, err = run(["check", str(p)])
    assert code == 3
    assert out == ""
    msg = json.loads(err)
    assert msg["error"] == "math" and len(msg["point"]) == 2
    assert 1.0 <= msg["point"][0] <= 1.0135


def test_solve_toda_builtin(tmp_path):
    grid = tmp_path / "out.grid"
    code, out, _ = run(["solve-toda", "toda-x1x3", "--output", str(grid)])
    assert code == 0
    rep = json.loads(out)
    assert rep["solver"]["converged"] and rep["solver"]["iterations"] <= 5
    assert rep["solver"]["residual_history"][-1] < 1e-10
    assert grid.read_text().startswith("toda-grid v1 9 9 9 9 ")
    code, out, _ = run(["solve-toda", "toda-manufactured"])
    assert code == 0
    assert {c["name"]: c["pass"] for c in json.loads(out)["checks"]} == {"residual": True, "solution_error": True}


def test_solve_toda_zero_and_nonconvergence(tmp_path):
    zero = {"kind": "toda_solve", "grid": {"sizes": [5] * 4, "box": [[-1, 1]] * 4}, "boundary": "0",
            "reference": "0", "checks": ["residual", "solution_error"]}
    p = tmp_path / "z.json"
    p.write_text(json.dumps(zero))
    code, out, _ = run(["solve-toda", str(p), "--output", str(tmp_path / "z.grid")])
    assert code == 0
    assert json.loads(out)["checks"][1]["max_defect"] == 0.0
    hard = dict(zero, boundary="x1^2*x3", manufactured=True, reference="x1^2*x3", max_iter=1, initial="zero")
    p.write_text(json.dumps(hard))
    grid = tmp_path / "h.grid"
    code, out, _ = run(["solve-toda", str(p), "--output", str(grid)])
    assert code == 4
    assert grid.exists()
    assert json.loads(out)["solver"]["status"] == "max_iter"


def test_every_check_is_runnable():
    for kind, name in (("conformal_product", "biharmonic-x1x3"), ("hyperhermitian", "hyperhermitian-rezw")):
        cfg = dict(BUILTINS[name])
        cfg["checks"] = sorted(CHECKS[kind])
        cfg["samples"] = 5
        from weylkit.scenarios import run_checks, validate
        rep = run_checks(validate(cfg))
        assert {c.name for c in rep.checks} == set(CHECKS[kind])
        assert rep.passed, [c for c in rep.checks if not c.passed]
