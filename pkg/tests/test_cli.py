import numpy as np
import pytest

from pulse_cns.cli import main


SMALL_CONFIG = """\
grid.n = 16
grid.L = 1.0
pulse.delta = 0.125
pulse.alpha = 0.5
pulse.gamma = 1.0
pulse.v_amp = 0.0
solver.dt_init = 1e-3
solver.t_end = 0.004
solver.scheme = imex
solver.checkpoint_every = 2
solver.diagnostics_every = 1
diag.besov = false
seeds = 0.5,0.5,0.5; 0.5625,0.5,0.5
output.dir = {out}
"""


def write_config(tmp_path, **overrides):
    text = SMALL_CONFIG.format(out=tmp_path / "out")
    for key, value in overrides.items():
        text += f"{key} = {value}\n"
    path = tmp_path / "config.txt"
    path.write_text(text)
    return path


def test_toy_subcommand(capsys):
    assert main(["toy", "--delta", "0.5", "--alpha", "1", "--gamma", "1",
                 "--t", "1.5"]) == 0
    out = capsys.readouterr().out.strip()
    assert float(out) == pytest.approx(0.5)


def test_envelope_subcommand(capsys, tmp_path):
    csv = tmp_path / "env.csv"
    marks = tmp_path / "marks.csv"
    code = main(["envelope", "--delta", str(2.0**-15), "--alpha", "1",
                 "--gamma", "1", "--csv", str(csv), "--markers", str(marks)])
    assert code == 0
    out = capsys.readouterr().out
    assert "T0 = 2.670288086e-05" in out
    assert csv.read_text().startswith("t,envelope\n")
    lines = marks.read_text().strip().splitlines()
    assert lines[0] == "name,t"
    assert any(ln.startswith("T0,") for ln in lines)


def test_run_and_report_and_diagnose(tmp_path, capsys):
    cfg = write_config(tmp_path)
    assert main(["run", "--config", str(cfg)]) == 0
    out_dir = tmp_path / "out"
    assert (out_dir / "diagnostics.csv").exists()
    assert (out_dir / "summary.txt").exists()
    assert (out_dir / "trajectory_000.csv").exists()
    ckpts = sorted(out_dir.glob("checkpoint_*.pcns"))
    assert len(ckpts) >= 2

    csv_bytes = (out_dir / "diagnostics.csv").read_bytes()
    # determinism: identical config reproduces identical bytes
    assert main(["run", "--config", str(cfg), "--out", str(tmp_path / "out2")]) == 0
    assert (tmp_path / "out2" / "diagnostics.csv").read_bytes() == csv_bytes

    # recompute diagnostics from the stored checkpoints
    diag_csv = tmp_path / "rediag.csv"
    spect_csv = tmp_path / "spectrum.csv"
    code = main(["diagnose", *map(str, ckpts), "--out", str(diag_csv),
                 "--delta", "0.125", "--alpha", "0.5",
                 "--spectrum", str(spect_csv)])
    assert code == 0
    header = diag_csv.read_text().splitlines()[0]
    assert header.startswith("t,mass,H_rho")
    assert spect_csv.read_text().startswith("k,E_u,E_rho\n")

    # bundle a report
    capsys.readouterr()
    assert main(["report", "--run", str(out_dir), "--delta", "0.125",
                 "--alpha", "0.5", "--gamma", "1.0"]) == 0
    assert (out_dir / "report.txt").exists()
    assert "threshold report" in capsys.readouterr().out


def test_init_subcommand(tmp_path, capsys):
    out = tmp_path / "fresh"
    assert main(["init", "--out", str(out)]) == 0
    assert (out / "config.txt").exists()
    assert (out / "initial.pcns").exists()
    # refuses to clobber without --force
    assert main(["init", "--out", str(out)]) == 2
    assert main(["init", "--out", str(out), "--force"]) == 0


def test_bad_config_exits_2(tmp_path, capsys):
    cfg = tmp_path / "bad.txt"
    cfg.write_text("grid.n = 16\nnot_a_key = 1\n")
    assert main(["run", "--config", str(cfg)]) == 2
    err = capsys.readouterr().err
    assert "line 2" in err


def test_missing_files_exit_2(tmp_path):
    assert main(["run", "--config", str(tmp_path / "nope.txt")]) == 2
    assert main(["diagnose", str(tmp_path / "nope.pcns"), "--out",
                 str(tmp_path / "o.csv")]) == 2


def test_verify_fast_suites(capsys):
    code = main(["verify", "--suite", "toy", "--suite", "schedule",
                 "--suite", "potential"])
    assert code == 0
    out = capsys.readouterr().out
    assert "[PASS] toy_oracle" in out
    assert "[PASS] schedule_arithmetic" in out
    assert "3/3 checks passed" in out
