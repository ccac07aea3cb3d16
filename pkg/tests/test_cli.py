import json
import subprocess
import sys

import pytest

from feec.cli import run
from feec.cohomology import betti, whitney_complex
from feec.io import mesh_from_json
from feec.simplicial import flat_torus


@pytest.fixture(autouse=True)
def _in_tmp(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)


def call(capsys, *argv):
    code = run(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def report(capsys, *argv):
    code, out, err = call(capsys, *argv)
    assert code == 0, err or out
    return json.loads(out)


def test_betti_torus(capsys):
    rep = report(capsys, "betti", "--generate", "torus:3,3")
    assert rep["betti"] == [1, 2, 1] and rep["euler"] == 0 and rep["seed"] == 0


def test_relative_betti_triangle_boundary(capsys):
    rep = report(capsys, "relative-betti", "--generate", "simplex:2", "--rel", "boundary")
    assert rep["betti"] == [0, 0, 1]


def test_poincare_circle_two_levels(capsys):
    rep = report(capsys, "poincare", "--generate", "circle:24", "-k", "0", "--levels", "2")
    assert len(rep["levels"]) == 2
    c = [lv["poincare"] for lv in rep["levels"]]
    assert abs(c[0] / c[1] - 1) <= 0.05 and rep["summary"]["poincare_ratio"] <= 1.05


def test_seed_is_recorded(capsys):
    rep = report(capsys, "hodge", "--generate", "torus:3,3", "-k", "1", "--seed", "17")
    assert rep["seed"] == 17 and rep["reconstruction_error"] < 1e-10


@pytest.mark.parametrize("argv", [
    ["betti", "--generate", "torus:3,3"],
    ["hodge", "--generate", "torus:3,3", "-k", "1", "--seed", "5"],
    ["gap-study", "--generate", "donut:3,3", "-k", "1", "--levels", "2"],
])
def test_reports_are_byte_stable(capsys, argv):
    first = call(capsys, *argv)[1]
    assert first == call(capsys, *argv)[1]


def test_threads_do_not_change_wedge_report(capsys, monkeypatch):
    argv = ["wedge-check", "--generate", "simplex:2", "-k", "1", "-n", "2", "--trials", "3"]
    monkeypatch.setenv("FEEC_THREADS", "1")
    one = call(capsys, *argv)[1]
    monkeypatch.setenv("FEEC_THREADS", "4")
    assert call(capsys, *argv)[1] == one
    assert json.loads(one)["ok"] is True


def test_generate_round_trip(capsys, tmp_path):
    assert call(capsys, "generate", "--generate", "torus:3,3", "-o", "m.json")[0] == 0
    K, _ = mesh_from_json(tmp_path / "m.json")
    assert betti(whitney_complex(K)) == betti(whitney_complex(flat_torus(3, 3)[0]))
    from_file = call(capsys, "harmonic", "m.json", "-k", "1")[1]
    in_process = call(capsys, "harmonic", "--generate", "torus:3,3", "-k", "1")[1]
    assert from_file == in_process


def test_check_and_refine(capsys, tmp_path):
    rep = report(capsys, "check", "--generate", "sphere:2")
    assert rep["valid"] and rep["dd_zero"] and rep["euler"] == 2
    assert call(capsys, "refine", "--generate", "simplex:2", "-o", "fine.json")[0] == 0
    K, _ = mesh_from_json(tmp_path / "fine.json")
    assert K.count(2) == 6


def test_interpolate_and_cochain_files(capsys, tmp_path):
    (tmp_path / "tri.json").write_text(json.dumps({"vertices": [[0, 0], [1, 0], [0, 1]], "cells": [[0, 1, 2]]}))
    (tmp_path / "u.json").write_text(json.dumps(
        {"degree": 0, "components": {"0-1-2": [{"alpha": [1, 1], "I": [], "coef": "3/2"}]}}))
    rep = report(capsys, "interpolate", "tri.json", "--form", "u.json")
    assert rep["commutes"] is True
    assert rep["cochain"]["degree"] == 0 and rep["cochain"]["values"] == {}
    (tmp_path / "c.json").write_text(json.dumps({"degree": 1, "values": {"0-1": 1, "1-2": "1/2"}}))
    rep = report(capsys, "hodge", "tri.json", "--cochain", "c.json")
    assert rep["degree"] == 1 and rep["norms"]["harmonic"] < 1e-12


def test_bad_mesh_is_parse_error(capsys, tmp_path):
    (tmp_path / "bad.json").write_text("{not json")
    code, out, _ = call(capsys, "betti", "bad.json")
    assert code == 1 and json.loads(out)["error"]["kind"] == "parse"
    code, out, _ = call(capsys, "betti", "missing.json")
    assert code == 1 and json.loads(out)["error"]["kind"] == "parse"


def test_domain_error(capsys):
    code, out, _ = call(capsys, "harmonic", "--generate", "simplex:2", "-k", "5")
    assert code == 1 and json.loads(out)["error"]["kind"] == "domain"


@pytest.mark.parametrize("argv", [
    ["betti", "--generate", "torus:3,3", "--bogus"],
    ["nosuchcommand"],
    ["betti"],
    ["harmonic", "--generate", "torus:3,3", "-k", "1", "--tol", "nope=1"],
    ["relative-betti", "--generate", "simplex:2"],
])
def test_usage_errors(capsys, argv):
    assert call(capsys, *argv)[0] == 2


def test_invariant_violation_writes_sidecar(capsys, tmp_path):
    code, out, _ = call(capsys, "harmonic", "--generate", "torus:3,3", "-k", "1",
                        "--tol", "nullspace=1e-30", "-o", "h.json")
    assert code == 1
    err = json.loads((tmp_path / "h.json").read_text())["error"]
    assert err["kind"] == "invariant"
    diag = json.loads((tmp_path / "h.json.diagnostics.json").read_text())
    assert diag["betti"] == 2


def test_console_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "feec.cli", "betti", "--generate", "circle:5"],
                          capture_output=True, text=True, cwd=tmp_path)
    assert proc.returncode == 0 and json.loads(proc.stdout)["betti"] == [1, 1]
