import csv
import json
import math
import shutil
import subprocess

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from two_end_lab import cli
from two_end_lab.config import RunConfig, validate_config
from two_end_lab.errors import ConfigError, DomainError
from two_end_lab.io import jsonable, read_field, write_field, write_json
from two_end_lab.pde import AxiGrid, ScalarField


# -- configuration -----------------------------------------------------------------

def test_minimal_config_uses_defaults():
    cfg = validate_config("mode = solve\n")
    assert cfg == RunConfig(mode="solve")


def test_comments_and_blank_lines():
    cfg = validate_config("# header\n\nmode = probe  # trailing\nk_target = 0.5\n")
    assert cfg.k_target == 0.5


@pytest.mark.parametrize("text, line, fragment", [
    ("", None, "mode required"),
    ("mode = solve\nfoo = 1\n", 2, "unknown key"),
    ("mode = solve\nk = 1.0\n", 2, "growth rate must exceed sqrt2"),
    ("mode = solve\nh = 0.3\n", 2, "<= 0.25"),
    ("mode = solve\nR = 10.05\n", 2, "multiple of h"),
    ("mode = solve\nmode = probe\n", 2, "duplicate"),
    ("mode = walk\n", 1, "expected one of"),
    ("mode = solve\nmax_iter = 2.5\n", 2, "max_iter"),
    ("mode = probe\nk_target = 0.9\n", 2, "k_target"),
    ("mode = continue\nk_floor = 1.2\n", 2, "k_floor"),
    ("mode solve\n", 1, "key = value"),
])
def test_config_errors_name_the_line(text, line, fragment):
    with pytest.raises(ConfigError) as err:
        validate_config(text)
    assert fragment in str(err.value)
    assert err.value.line == line


@settings(max_examples=30, deadline=None)
@given(st.sampled_from(["solve", "probe", "reduced", "verify"]),
       st.floats(1.5, 20.0), st.integers(1, 100), st.booleans())
def test_config_text_round_trip(mode, k, trials, dump):
    cfg = RunConfig(mode=mode, k=k, trials=trials, dump_fields=dump)
    assert validate_config(cfg.to_text()) == cfg


# -- artifact formats ----------------------------------------------------------------

def test_field_round_trip_is_exact(tmp_path, rng):
    g = AxiGrid.from_spacing(3.0, 2.0, 0.25)
    f = ScalarField(g, rng.normal(size=g.shape), k=6.0, c=-6.88)
    p = tmp_path / "f.txt"
    write_field(p, f)
    head = p.read_text().splitlines()[0].split()
    assert head[:4] == ["axi-field", "v1", str(g.n_r), str(g.n_z)]
    back = read_field(p)
    assert np.array_equal(back.values, f.values)
    assert (back.k, back.c, back.grid) == (f.k, f.c, g)


def test_field_reader_rejects_garbage(tmp_path):
    p = tmp_path / "bad.txt"
    p.write_text("axi-field v2 3 3 0.1 0.1 1 1\n")
    with pytest.raises(DomainError):
        read_field(p)


def test_json_has_schema_and_no_nan(tmp_path):
    p = tmp_path / "r.json"
    write_json(p, dict(a=math.nan, b=np.float64(2.5), c=np.arange(3), d=(np.True_,)))
    doc = json.loads(p.read_text())
    assert doc == {"schema": "two-end-lab/1", "a": None, "b": 2.5, "c": [0, 1, 2], "d": [True]}
    assert jsonable({1: math.inf}) == {"1": None}


# -- command line --------------------------------------------------------------------

def _run(tmp_path, text, *extra):
    cfg = tmp_path / "run.cfg"
    cfg.write_text(text)
    out = tmp_path / "out"
    code = cli.main([str(cfg), "--out", str(out), "--quiet", *extra])
    report = out / "report.json"
    return code, out, (json.loads(report.read_text()) if report.exists() else None)


def _header(path):
    with open(path, newline="") as fh:
        return next(csv.reader(fh))


def test_cli_verify(tmp_path):
    code, _, rep = _run(tmp_path, "mode = verify\n")
    assert code == 0
    assert rep["schema"] == "two-end-lab/1" and rep["passed"]
    assert rep["constants"]["c1"] == pytest.approx(8.0)


def test_cli_probe(tmp_path):
    code, out, rep = _run(tmp_path, "mode = probe\nk_target = 0.5\ntrials = 6\n")
    assert code == 0
    probe = json.loads((out / "probe.json").read_text())
    assert probe["verdict"] == "no-two-end-regime" and probe["delta_obs"] > 0


def test_cli_reduced(tmp_path):
    code, out, rep = _run(tmp_path, "mode = reduced\np0 = 2\nslope0 = 0.2\nr_end = 1e4\n")
    assert code == 0
    assert _header(out / "trajectory.csv") == ["r", "p", "dp", "mu"]


SMALL = "R = 30\nZ = 30\nh = 0.25\nk = 4\n"


def test_cli_solve(tmp_path):
    code, out, rep = _run(tmp_path, "mode = solve\n" + SMALL)
    assert code == 0, rep["assertions"]
    assert _header(out / "nodal_curve.csv") == ["r", "f", "df", "d2f"]
    field = read_field(out / "field.txt")
    assert field.k == 4.0
    sol = rep["solution"]
    assert sol["residual_norm"] < 1e-9 and sol["monotonicity"]["passed"]


def test_cli_continue(tmp_path):
    code, out, rep = _run(tmp_path, "mode = continue\ndirection = up\nmax_points = 3\n"
                          "dump_fields = true\n" + SMALL)
    assert code == 0, rep["assertions"]
    assert _header(out / "branch_up.csv") == ["s", "k", "c", "apex_axis", "apex_dist",
                                              "newton_iters", "residual_norm"]
    assert (out / "branch_up_002.txt").exists()
    assert not (out / "branch_down.csv").exists()


def test_cli_pipeline_failure_exits_1(tmp_path):
    code, _, rep = _run(tmp_path, "mode = solve\nmax_iter = 1\n" + SMALL)
    assert code == 1
    assert rep["error"]["type"] == "NonConvergenceError"
    assert len(rep["error"]["history"]) == 2


def test_cli_usage_errors_exit_2(tmp_path, monkeypatch, capsys):
    code, _, _ = _run(tmp_path, "mode = solve\nk = 1.0\n")
    assert code == 2
    assert "line 2" in capsys.readouterr().err
    assert cli.main([str(tmp_path / "missing.cfg")]) == 2
    monkeypatch.setenv("TWO_END_LAB_THREADS", "many")
    code, _, _ = _run(tmp_path, "mode = verify\n")
    assert code == 2


def test_console_script_is_installed(tmp_path):
    exe = shutil.which("two-end-lab")
    if exe is None:
        pytest.skip("package not installed with its console script")
    res = subprocess.run([exe, "--help"], capture_output=True, text=True)
    assert res.returncode == 0 and "--out" in res.stdout
