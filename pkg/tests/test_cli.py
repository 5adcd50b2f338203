import json

import numpy as np
import pytest

from hlab.cli import main
from hlab.grid import GridFunction


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_exponents_example(capsys):
    code, out, _ = run(capsys, "exponents", "--n", "4", "--alpha", "2", "--p", "3", "--tau", "0.5")
    assert code == 0
    rep = json.loads(out)
    assert rep["sigma"] == 0.6 and rep["tau_star"] == 1
    assert "generated_at" in rep and rep["version"]


def test_regularize_fixture(tmp_path, capsys):
    src = tmp_path / "family.json"
    dst = tmp_path / "regular.json"
    src.write_text(json.dumps({"tau": 0.5, "cubes": [{"level": 1, "coords": [0]}, {"level": 1, "coords": [1]}]}))
    code, out, _ = run(capsys, "regularize", "--input", str(src), "--output", str(dst))
    assert code == 0
    assert json.loads(dst.read_text()) == {"tau": 0.5, "cubes": [{"level": 0, "coords": [0]}]}


def test_usage_and_domain_errors(capsys):
    code, _, err = run(capsys, "frobnicate")
    assert code == 2 and "usage" in err
    code, _, err = run(capsys, "exponents", "--n", "4", "--alpha", "2", "--p", "0.5")
    assert code == 2
    assert json.loads(err.strip().splitlines()[-1])["error"] == "domain"
    code, _, err = run(capsys, "regularize", "--input", "/nonexistent/family.json")
    assert code == 2


def test_numerical_error_exit(capsys, monkeypatch):
    from hlab import cli
    from hlab.errors import NumericalError

    def boom(*args, **kwargs):
        raise NumericalError("did not converge", {"step": 0.1})

    monkeypatch.setattr(cli, "summary", boom)
    code = cli.main(["exponents", "--n", "1", "--alpha", "2", "--p", "2"])
    _, err = capsys.readouterr()
    payload = json.loads(err)
    assert code == 3
    assert payload["error"] == "numerical" and payload["diagnostics"] == {"step": 0.1}
    code = cli.main(["estimate-dim", "--levels", "4..5"])
    _, err = capsys.readouterr()
    assert code == 2 and json.loads(err)["type"] == "FitError"


def test_config_file_and_override(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# exponents\nn = 4\nalpha = 2\np = 3\ntau = 2\n")
    code, out, _ = run(capsys, "exponents", "--config", str(cfg))
    assert code == 0 and json.loads(out)["sigma"] == 2
    code, out, _ = run(capsys, "exponents", "--config", str(cfg), "--tau", "0.5")
    assert json.loads(out)["sigma"] == 0.6
    bad = tmp_path / "bad.cfg"
    bad.write_text("colour = blue\n")
    code, _, _ = run(capsys, "exponents", "--config", str(bad), "--n", "1", "--alpha", "2", "--p", "2")
    assert code == 2


def test_operators_roundtrip(tmp_path, capsys):
    g = GridFunction.from_function(lambda c: (np.abs(c[..., 0]) <= 1).astype(float), 1, (-2.0,), 4.0, 256)
    src = tmp_path / "g.csv"
    src.write_text(g.to_csv())
    dst = tmp_path / "out.csv"
    for op, order in (("maximal", "0"), ("riesz", "0.5"), ("bessel", "1.5")):
        code, _, _ = run(capsys, "operators", "--op", op, "--order", order, "--input", str(src), "--output", str(dst))
        assert code == 0
        res = GridFunction.from_csv(dst.read_text())
        assert res.same_grid(g) and np.all(res.values >= 0)
    code, _, _ = run(capsys, "operators", "--op", "riesz", "--input", str(src))
    assert code == 2


def test_csv_format(capsys):
    code, out, _ = run(capsys, "distortion", "--scenario", "cantor_identity", "--format", "csv")
    assert code == 0
    lines = out.strip().splitlines()
    assert lines[0].startswith("level,cubes,tau_sum")
    assert len(lines) == 7


@pytest.mark.parametrize(
    "argv",
    [
        ["estimate-dim", "--levels", "4..10"],
        ["phi", "--mu", "0", "--q", "0.63", "--levels", "4..8"],
        ["counterexample", "--points", "20", "--seed", "3"],
        ["adams-check", "--mode", "maximal", "--trials", "5", "--cells", "256"],
        ["diam-check", "--mode", "riesz", "--trials", "5", "--cells", "256"],
    ],
)
def test_subcommands_run(capsys, argv):
    code, out, err = run(capsys, *argv)
    assert code == 0, err
    rep = json.loads(out)
    assert rep["version"]
