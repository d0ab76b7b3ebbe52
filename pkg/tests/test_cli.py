import hashlib
import json

import numpy as np
import pytest

from cellwise import __version__
from cellwise.cli import run
from cellwise.io import read_csv


def _digest(paths):
    return {p: hashlib.sha256(p.read_bytes()).hexdigest() for p in paths}


def _error(capsys):
    return json.loads(capsys.readouterr().err.strip().splitlines()[-1])


@pytest.fixture
def data(tmp_path):
    path = tmp_path / "x.csv"
    assert run(["simulate", "table1", "--n", "200", "--d", "4", "--seed", "1",
                "--out", str(path), "--mask", str(tmp_path / "mask.csv")]) == 0
    return path


@pytest.fixture
def counts(tmp_path):
    path = tmp_path / "t.csv"
    T = np.random.default_rng(0).integers(5, 60, (24, 4))
    lines = [",a,b,c,d"] + [f"r{i}," + ",".join(map(str, row)) for i, row in enumerate(T)]
    path.write_text("\n".join(lines) + "\n")
    return path


def test_detect(data, tmp_path):
    out = tmp_path / "f.json"
    assert run(["detect", "--in", str(data), "--out", str(out),
                "--cellmap", str(tmp_path / "m.svg")]) == 0
    doc = json.loads(out.read_text())
    assert doc["op"] == "detect"
    assert (tmp_path / "m.svg").read_text().startswith("<")


@pytest.mark.parametrize("method", ["classical", "coordmedian", "coordmcd", "spatialmedian",
                                    "twostep", "pairwise"])
def test_estimate(data, tmp_path, method):
    out = tmp_path / "e.json"
    assert run(["estimate", "--in", str(data), "--out", str(out), "--method", method]) == 0
    assert json.loads(out.read_text())["op"] == "estimate"


def test_regress_stdout(data, capsys):
    assert run(["regress", "--in", str(data), "--response", "2", "--cov", "classical"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["op"] == "regress"


def test_arfit(tmp_path):
    y = tmp_path / "y.csv"
    assert run(["simulate", "ar3", "--n", "300", "--out", str(y)]) == 0
    out = tmp_path / "a.json"
    assert run(["arfit", "--in", str(y), "--order", "3", "--out", str(out)]) == 0
    assert json.loads(out.read_text())["op"] == "arfit"


def test_attack(data, tmp_path):
    out = tmp_path / "att.csv"
    assert run(["breakdown", "attack", "--kind", "location", "--in", str(data),
                "--out", str(out), "--c", "1000", "--json", str(tmp_path / "a.json")]) == 0
    assert np.allclose(read_csv(out).values.sum(axis=1), 1000)


def test_curve_deterministic(tmp_path):
    outs = []
    for i in range(2):
        path = tmp_path / f"c{i}.csv"
        assert run(["breakdown", "curve", "--reps", "2", "--seed", "5", "--n", "20",
                    "--out", str(path), "--plot", str(tmp_path / f"c{i}.svg")]) == 0
        outs.append(path.read_bytes() + (tmp_path / f"c{i}.svg").read_bytes())
    assert outs[0] == outs[1]


@pytest.mark.parametrize("method", ["classical", "robust"])
def test_ca(counts, tmp_path, method):
    out = tmp_path / "ca.json"
    argv = ["ca", "--in", str(counts), "--method", method, "--k", "2", "--out", str(out),
            "--biplot", str(tmp_path / "b.svg")]
    if method == "robust":
        argv += ["--cellmap", str(tmp_path / "m.svg")]
    assert run(argv) == 0
    assert (tmp_path / "b.svg").exists()


def test_cellmap_needs_robust(counts, tmp_path, capsys):
    assert run(["ca", "--in", str(counts), "--cellmap", str(tmp_path / "m.svg")]) == 1
    assert not (tmp_path / "m.svg").exists()


def test_inputs_not_mutated(data, counts, tmp_path):
    before = _digest([data, counts])
    run(["detect", "--in", str(data), "--out", str(tmp_path / "f.json")])
    run(["estimate", "--in", str(data), "--out", str(tmp_path / "e.json")])
    run(["regress", "--in", str(data), "--out", str(tmp_path / "r.json")])
    run(["breakdown", "attack", "--kind", "implosion", "--in", str(data),
         "--out", str(tmp_path / "i.csv")])
    run(["ca", "--in", str(counts), "--method", "robust", "--out", str(tmp_path / "ca.json")])
    assert _digest([data, counts]) == before


class TestExitCodes:
    def test_missing_file(self, tmp_path, capsys):
        missing = tmp_path / "nope.csv"
        assert run(["detect", "--in", str(missing), "--out", str(tmp_path / "f.json")]) == 2
        assert str(missing) in _error(capsys)["message"]

    def test_parse_error(self, tmp_path, capsys):
        bad = tmp_path / "bad.csv"
        bad.write_text("a,b\n1,2\n3,x\n")
        assert run(["estimate", "--in", str(bad), "--out", str(tmp_path / "e.json")]) == 2
        assert "error" in _error(capsys)

    def test_numeric_error(self, tmp_path, capsys):
        flat = tmp_path / "flat.csv"
        flat.write_text("a,b\n" + "1,2\n" * 30)
        assert run(["detect", "--in", str(flat), "--out", str(tmp_path / "f.json")]) == 2
        assert not (tmp_path / "f.json").exists()

    @pytest.mark.parametrize("argv", [
        [],
        ["nope"],
        ["detect"],
        ["detect", "--in", "x.csv", "--out", "y.json", "--bogus"],
        ["arfit", "--in", "y.csv", "--order", "0"],
        ["ca", "--in", "t.csv", "--k", "zero"],
    ])
    def test_usage(self, argv, capsys):
        assert run(argv) == 1
        assert _error(capsys)["error"]

    def test_help_and_version(self, capsys):
        assert run(["--help"]) == 0
        assert "detect" in capsys.readouterr().out
        assert run(["--version"]) == 0
        assert __version__ in capsys.readouterr().out
