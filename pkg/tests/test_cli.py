import hashlib
import subprocess
import sys
from pathlib import Path

import pytest

from orlicz_el.cli import EXIT_CONFIG, EXIT_NOT_CONVERGED, EXIT_OK, EXIT_REJECTED, main

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


@pytest.fixture(autouse=True)
def quiet(monkeypatch):
    monkeypatch.setenv("ORLICZ_EL_LOG", "quiet")


def run(*argv):
    return main([str(a) for a in argv])


def read(path):
    return Path(path).read_bytes()


def test_solve_quadratic(tmp_path):
    assert run("solve", "--config", CONFIGS / "quadratic.ini", "--out", tmp_path) == EXIT_OK
    text = (tmp_path / "report.txt").read_text()
    assert any(l.split() == ["status", "=", "converged"] for l in text.splitlines())
    err = float(next(l for l in text.splitlines() if l.startswith("sup_error_vs_exact")).split("=")[1])
    assert err <= 1e-4
    for name in ("hypotheses.csv", "minimizer.csv", "action_history.csv"):
        assert (tmp_path / name).exists()


def test_reports_byte_identical(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for out in (a, b):
        assert run("solve", "--config", CONFIGS / "quadratic.ini", "--out", out) == EXIT_OK
    for name in ("report.txt", "hypotheses.csv", "minimizer.csv", "action_history.csv"):
        assert read(a / name) == read(b / name)


def test_config_hash_and_probe_ranges_recorded(tmp_path):
    cfg = CONFIGS / "quadratic.ini"
    run("check", "--config", cfg, "--out", tmp_path)
    text = (tmp_path / "report.txt").read_text()
    assert hashlib.sha256(cfg.read_bytes()).hexdigest() in text
    assert "hypothesis_x_range" in text and "nfunction_probe_range" in text


def test_csv_conventions(tmp_path):
    run("solve", "--config", CONFIGS / "quadratic.ini", "--out", tmp_path)
    raw = read(tmp_path / "minimizer.csv")
    assert b"\r" not in raw and raw.endswith(b"\n")
    header, first = raw.decode().splitlines()[:2]
    assert "," in header and len(first.split(",")) == len(header.split(","))


def test_bad_chain_rejected(tmp_path):
    assert run("solve", "--config", CONFIGS / "exp_cosh_bad_chain.ini", "--out", tmp_path) == EXIT_REJECTED
    text = (tmp_path / "report.txt").read_text()
    assert "rejected" in text and "chain_phi0_phi1" in text
    assert not (tmp_path / "minimizer.csv").exists()
    assert run("check", "--config", CONFIGS / "exp_cosh_bad_chain.ini", "--out", tmp_path) == EXIT_REJECTED
    assert run("check", "--config", CONFIGS / "exp_cosh.ini", "--out", tmp_path) == EXIT_OK


def test_not_converged_exit(tmp_path):
    cfg = tmp_path / "short.ini"
    lines = [("max_iter = 3" if l.startswith("max_iter") else l)
             for l in (CONFIGS / "exp_cosh.ini").read_text().splitlines()]
    cfg.write_text("\n".join(lines) + "\n")
    assert run("solve", "--config", cfg, "--out", tmp_path / "o") == EXIT_NOT_CONVERGED
    assert "not_converged" in (tmp_path / "o" / "report.txt").read_text()


@pytest.mark.parametrize("body,where", [
    ("[grid]\nN = 4\n", ":2:"),
    ("[grid]\nT = 1\nL = 3\n", ":3:"),
    ("[nfunctions]\nphi = power(0.5)\n", ":2:"),
    ("[solver]\nmethod = newton\n", ":2:"),
    ("[bogus]\nx = 1\n", ":1:"),
])
def test_config_errors_name_line_and_field(tmp_path, capsys, body, where):
    cfg = tmp_path / "bad.ini"
    cfg.write_text(body)
    assert run("check", "--config", cfg) == EXIT_CONFIG
    err = capsys.readouterr().err
    assert str(cfg) + where in err


def test_missing_config_file(tmp_path, capsys):
    assert run("check", "--config", tmp_path / "nope.ini") == EXIT_CONFIG
    assert "nope.ini" in capsys.readouterr().err


def test_bad_cli_values(capsys):
    assert run("analyze", "--family", "gamma") == EXIT_CONFIG
    assert "--family" in capsys.readouterr().err
    assert run("verify", "--probes", "0") == EXIT_CONFIG
    assert run("verify", "--seed", "-1") == EXIT_CONFIG


def test_analyze(tmp_path):
    assert run("analyze", "--config", CONFIGS / "analyze.ini", "--out", tmp_path) == EXIT_OK
    text = (tmp_path / "report.txt").read_text()
    assert "alpha" in text and "delta2" in text.lower()
    assert run("analyze", "--family", "exp_family", "--n", "2", "--out", tmp_path / "e") == EXIT_OK


def test_verify_sweeps_and_negative_control(tmp_path):
    assert run("verify", "--probes", "300", "--out", tmp_path / "ok") == EXIT_OK
    rows = (tmp_path / "ok" / "verify.csv").read_text().splitlines()[1:]
    assert {r.split(",")[0] for r in rows} >= {"young", "holder", "sobolev", "wirtinger", "amemiya"}
    assert all(r.split(",")[2] == "0" for r in rows)
    run("verify", "--probes", "300", "--sobolev-scale", "0.5", "--out", tmp_path / "bad")
    rows = dict((r.split(",")[0], r.split(",")) for r in (tmp_path / "bad" / "verify.csv").read_text().splitlines()[1:])
    assert int(rows["sobolev"][2]) > 0


def test_seed_determinism(tmp_path):
    outs = []
    for seed, name in ((1, "a"), (1, "b"), (2, "c")):
        run("verify", "--probes", "200", "--seed", seed, "--out", tmp_path / name)
        outs.append(read(tmp_path / name / "verify.csv"))
    assert outs[0] == outs[1]
    assert outs[0] != outs[2]


def test_module_entry_point():
    out = subprocess.run([sys.executable, "-m", "orlicz_el", "--help"], capture_output=True, text=True)
    assert out.returncode == 0
    for cmd in ("analyze", "verify", "check", "solve"):
        assert cmd in out.stdout
