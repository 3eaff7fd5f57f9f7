import json
import subprocess
import sys

import numpy as np
import pytest

from qudit_cs import __version__
from qudit_cs.cli import dispatch
from qudit_cs.experiments import read_rows
from qudit_cs.matcore import load_matrix


def run(capsys, *argv):
    code = dispatch([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def kv(out):
    return dict(line.split("=", 1) for line in out.splitlines() if "=" in line and " " not in line.split("=", 1)[0])


def test_basis_check(capsys):
    code, out, _ = run(capsys, "basis", "--kind", "sud", "--dim", 5, "--check")
    vals = kv(out)
    assert code == 0 and vals["elements"] == "25"
    assert float(vals["orthonormality_residual"]) <= 1e-12


def test_basis_dump(tmp_path, capsys):
    path = tmp_path / "b.txt"
    code, _, _ = run(capsys, "basis", "--kind", "pauli", "--dim", 2, "--out", path)
    from qudit_cs.matcore import read_text
    blocks = read_text(open(path))
    assert code == 0 and len(blocks) == 4
    assert np.allclose(blocks[3], np.diag([1, -1]) / np.sqrt(2))
    assert (tmp_path / "b.txt.manifest.json").exists()


def test_coherence(capsys):
    code, out, _ = run(capsys, "coherence", "--kind", "sud", "--dim", 7, "--state", "rho1")
    vals = kv(out)
    assert code == 0 and float(vals["nu1"]) == pytest.approx(6.0) and float(vals["nu2"]) == pytest.approx(3.5)
    assert vals["rank"] == "1"


def test_state_measure_recover_pipeline(tmp_path, capsys):
    state = tmp_path / "rho.txt"
    rec = tmp_path / "rec.txt"
    est = tmp_path / "est.bin"
    assert run(capsys, "state", "--kind", "haar", "--dim", 4, "--seed", 5, "--out", state)[0] == 0
    manifest = json.load(open(str(state) + ".manifest.json"))
    assert manifest["seed"] == 5 and manifest["version"] == __version__
    assert run(capsys, "measure", "--state", state, "--kind", "pauli", "--m", 16, "--out", rec)[0] == 0
    assert open(rec).readline().strip() == "basis=pauli d=4 m=16"
    code, out, _ = run(capsys, "recover", "--record", rec, "--out", est)
    assert code == 0 and kv(out)["converged"] == "true"
    assert np.linalg.norm(load_matrix(est) - load_matrix(state)) <= 1e-6


def test_recover_nonconvergence_exit_code(tmp_path, capsys):
    state = tmp_path / "rho.txt"
    rec = tmp_path / "rec.txt"
    run(capsys, "state", "--kind", "haar", "--dim", 5, "--out", state)
    run(capsys, "measure", "--state", state, "--kind", "sud", "--m", 12, "--out", rec)
    code, out, _ = run(capsys, "recover", "--record", rec, "--max-iters", 2)
    assert code == 2 and kv(out)["converged"] == "false"


def test_usage_and_input_errors(tmp_path, capsys):
    assert run(capsys)[0] == 1
    assert run(capsys, "frobnicate")[0] == 1
    assert run(capsys, "basis", "--kind", "pauli", "--dim", 6, "--check")[0] == 1
    assert run(capsys, "state", "--dim", 3, "--rank", 5)[0] == 1
    bad = tmp_path / "bad.txt"
    bad.write_text("not a matrix\n")
    assert run(capsys, "measure", "--state", bad, "--kind", "sud", "--m", 2)[0] == 1
    assert run(capsys, "measure", "--state", tmp_path / "missing.txt", "--kind", "sud", "--m", 2)[0] == 2
    code, out, _ = run(capsys, "--version")
    assert code == 0 and __version__ in out


def test_sweep_command(tmp_path, capsys):
    cfg = tmp_path / "s.cfg"
    cfg.write_text("d1=3\nm_values=3,9\ntrials=2\nmaster_seed=4\n")
    out_dir = tmp_path / "out"
    code, out, _ = run(capsys, "sweep", "--config", cfg, "--out", out_dir, "--name", "tiny")
    assert code == 0
    rows = read_rows(out_dir / "tiny.csv")
    assert len(rows) == 4
    assert "margin m=9" in out
    manifest = json.load(open(out_dir / "tiny_manifest.json"))
    assert manifest["config"]["trials"] == "2"


def test_reproduce_su7(tmp_path, capsys, monkeypatch):
    monkeypatch.setenv("QUDIT_CS_OUT", str(tmp_path))
    code, out, _ = run(capsys, "reproduce", "su7", "--trials", 5)
    assert code == 0 and "state=rho1 m=46 trials=5" in out
    assert (tmp_path / "su7.txt").exists() and (tmp_path / "su7_manifest.json").exists()


def test_module_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "qudit_cs", "basis", "--kind", "sud", "--dim", "3", "--check"],
        capture_output=True, text=True,
    )
    assert proc.returncode == 0 and "elements=9" in proc.stdout
