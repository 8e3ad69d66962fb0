import json

import pytest

from planimm.cli import main
from planimm.field import Grid2
from planimm.maps import get_map


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_verify_algebra(capsys, tmp_path):
    code, out, _ = run(capsys, "verify-algebra", "--samples", "500", "--out", str(tmp_path))
    assert code == 0 and "FAIL" not in out
    assert (tmp_path / "algebra.csv").exists() and (tmp_path / "run.json").exists()


def test_verify_ops(capsys):
    code, out, _ = run(capsys, "verify-ops", "--grids", "17,33")
    assert code == 0 and "jac_ratio" in out


def test_verify_eigendata_command(capsys, tmp_path):
    code, out, _ = run(capsys, "verify-lemma1", "--map", "identity", "--grid", "9", "--out", str(tmp_path))
    assert code == 0
    data = json.loads((tmp_path / "lemma1.json").read_text())
    assert data["max_discrepancy"] < 1e-10
    assert (tmp_path / "metric.field").exists()


def test_reconstruct(capsys, tmp_path):
    code, out, _ = run(capsys, "reconstruct", "--map", "rotation:theta=0.5", "--grid", "9",
                       "--directions", "2", "--out", str(tmp_path))
    assert code == 0
    assert (tmp_path / "reconstruction.field").exists()


def test_compat_pass_and_fail(capsys, tmp_path):
    assert run(capsys, "compat", "--map", "rotation:theta=0.3", "--grid", "17")[0] == 0
    code, out, _ = run(capsys, "compat", "--map", "identity", "--grid", "17", "--curl-const", "1")
    assert code == 1 and "defect = 1.000e+00" in out


def test_compat_from_files(capsys, tmp_path):
    from planimm.field import curl

    f = get_map("shear").sample(Grid2.square(9))
    f.save(tmp_path / "b.field")
    curl(f).save(tmp_path / "c.field")
    code, _, _ = run(capsys, "compat", "--curl-file", str(tmp_path / "c.field"),
                     "--boundary-file", str(tmp_path / "b.field"))
    assert code == 0
    code, _, err = run(capsys, "compat", "--curl-file", str(tmp_path / "c.field"))
    assert code == 2 and "together" in err


def test_solve_and_uniqueness(capsys, tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"grid": {"n": 17}, "map": "rotation:theta=0.4", "init": "identity",
                               "n_starts": 3, "sigma": 0.05, "distance_tol": 1e-8}))
    code, out, _ = run(capsys, "solve", "--config", str(cfg), "--out", str(tmp_path / "s"))
    assert code == 0 and "converged=True" in out
    assert json.loads((tmp_path / "s" / "solve.json").read_text())["oracle_error"] < 1e-8
    code, out, _ = run(capsys, "uniqueness", "--config", str(cfg), "--out", str(tmp_path / "u"))
    assert code == 0 and "3/3" in out


def test_counterexample3d(capsys, tmp_path):
    code, out, _ = run(capsys, "counterexample3d", "--out", str(tmp_path))
    assert code == 0 and "metrics differ" in out
    assert json.loads((tmp_path / "counterexample3d.json").read_text())["checks"]


@pytest.mark.parametrize("argv", [
    [], ["bogus"], ["verify-lemma1", "--map", "nope", "--grid", "9"],
    ["verify-lemma1", "--map", "identity", "--grid", "2"], ["solve", "--config", "/no/such.json"],
    ["compat"], ["verify-algebra", "--threads", "0"],
])
def test_usage_errors_exit_2(capsys, argv):
    assert run(capsys, *argv)[0] == 2


def test_json_errors(capsys):
    code, _, err = run(capsys, "solve", "--config", "/no/such.json", "--json-errors")
    assert code == 2
    assert json.loads(err)["error"] == "usage"
