import csv
import json

import pytest

from ellax import cli


def write(tmp_path, cfg, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(cfg) if not isinstance(cfg, str) else cfg)
    return str(p)


SMALL_ELLIPTIC = {"command": "elliptic-check", "seed": 7, "lattices": 1, "pairs": 10, "eisenstein_N": 60}
LAT = {"omega1": [0.5, 0.0], "omega3": [0.15, 0.6]}


def test_elliptic_check_passes(tmp_path, capsys):
    code = cli.main(["--config", write(tmp_path, SMALL_ELLIPTIC), "--out", str(tmp_path / "o")])
    assert code == 0
    rep = json.loads((tmp_path / "o" / "report.json").read_text())
    assert rep["schema"] == 1 and rep["n_failures"] == 0
    for c in rep["checks"]:
        assert {"measured", "tol", "relation", "passed"} <= set(c)
    out = capsys.readouterr().out
    assert out.splitlines()[0].startswith("PASS wp_ode[0]")
    meta = json.loads((tmp_path / "o" / "run_meta.json").read_text())
    assert "elapsed_seconds" in meta and "started" not in rep


def test_missing_lattice_is_config_error(tmp_path, capsys):
    code = cli.main(["--config", write(tmp_path, {"command": "dim-check"}), "--out", str(tmp_path / "o")])
    assert code == 2
    err = json.loads(capsys.readouterr().err)
    assert err["error"] == "ConfigError" and err["path"] == "lattice"


@pytest.mark.parametrize("cfg,path", [
    ({"command": "dim-check", "lattice": {"omega1": [0.5, 0]}}, "lattice.omega3"),
    ({"command": "dim-check", "lattice": {"omega1": [0.5, 0], "omega3": [1.0, 0]}}, "lattice"),
    ({"command": "dim-check", "lattice": LAT, "kinds": ["gl(2)", "xx(3)"]}, "kinds[1]"),
    ({"command": "cm-run", "lattice": LAT, "state": {"q": [[0.1, 0], [0.2]], "p": [[0, 0], [0, 0]]}},
     "state.q[1]"),
    ({"command": "cm-run", "lattice": LAT, "dt": -1}, "dt"),
    ({"command": "nope"}, "command"),
    ({"command": "cm-run", "lattice": LAT, "seed": -3}, "seed"),
])
def test_field_paths(tmp_path, capsys, cfg, path):
    assert cli.main(["--config", write(tmp_path, cfg)]) == 2
    assert json.loads(capsys.readouterr().err)["path"] == path


def test_bad_json_and_missing_file(tmp_path, capsys):
    assert cli.main(["--config", write(tmp_path, "{\n  \"command\": ,\n}")]) == 2
    assert json.loads(capsys.readouterr().err)["path"] == "line 2"
    assert cli.main(["--config", str(tmp_path / "absent.json")]) == 2


def test_dim_check_gl2_row(tmp_path):
    cfg = {"command": "dim-check", "seed": 1, "lattice": LAT, "kinds": ["gl(2)"], "configurations": 1,
           "spaces": ["L", "N"]}
    assert cli.main(["--config", write(tmp_path, cfg), "--out", str(tmp_path / "o")]) == 0
    with open(tmp_path / "o" / "dims.csv") as fh:
        rows = {r["space"]: r for r in csv.DictReader(fh)}
    assert rows["L^D"]["dimension"] == "4" and rows["N^D"]["dimension"] == "8"
    assert rows["L^D"]["degree"] == "1"


def test_command_override_and_seed(tmp_path):
    cfg = dict(SMALL_ELLIPTIC, command="cm-run")
    code = cli.main(["elliptic-check", "--config", write(tmp_path, cfg), "--seed", "3", "--out", str(tmp_path / "o")])
    rep = json.loads((tmp_path / "o" / "report.json").read_text())
    assert code == 0 and rep["command"] == "elliptic-check" and rep["seed"] == 3


def test_tiny_tolerance_scale_fails(tmp_path):
    code = cli.main(["--config", write(tmp_path, SMALL_ELLIPTIC), "--tol-scale", "1e-12",
                     "--out", str(tmp_path / "o")])
    assert code == 1
    rep = json.loads((tmp_path / "o" / "report.json").read_text())
    assert rep["failures"] and not rep["passed"]


def test_cm_run_is_deterministic(tmp_path):
    cfg = {"command": "cm-run", "seed": 5, "lattice": {"omega1": [1.5, 0], "omega3": [0.45, 1.8]},
           "system": {"kind": "gl", "n": 2}, "state": {"min_sep": 0.2, "p_scale": 0.5},
           "checks": ["conservation"], "T": 0.05, "dt": 0.001}
    p = write(tmp_path, cfg)
    for d in ("a", "b"):
        assert cli.main(["--config", p, "--out", str(tmp_path / d)]) == 0
    assert (tmp_path / "a" / "report.json").read_bytes() == (tmp_path / "b" / "report.json").read_bytes()
    header = (tmp_path / "a" / "trajectory.csv").read_text().splitlines()[0]
    assert header.startswith("t,q0_re,q0_im")


def test_explicit_state(tmp_path):
    cfg = {"command": "cm-run", "lattice": {"omega1": [1.5, 0], "omega3": [0.45, 1.8]},
           "system": {"kind": "gl", "n": 2},
           "state": {"q": [[0.3, 0.1], [-0.4, 0.5]], "p": [[0.2, 0], [-0.1, 0.1]]},
           "checks": ["conservation"], "T": 0.01, "dt": 0.001}
    assert cli.main(["--config", write(tmp_path, cfg), "--out", str(tmp_path / "o")]) == 0
    rep = json.loads((tmp_path / "o" / "report.json").read_text())
    assert rep["initial_state"]["q"][0] == [0.3, 0.1]


def test_to_jsonable_handles_nonfinite():
    import numpy as np
    out = cli.to_jsonable({"a": np.float64("nan"), "b": 1 + 2j, "c": np.arange(2)})
    assert out == {"a": None, "b": [1.0, 2.0], "c": [0, 1]}
