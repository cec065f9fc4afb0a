import json

import pytest

from haptotaxis.cli import main
from haptotaxis.config import parse_config
from haptotaxis.diagnostics import CSV_COLUMNS
from haptotaxis.runner import Check, RunSummary, read_csv, run_scenario

SMALL = """
grid: {extents: [1.0], n: [32]}
params: {delta: 1.0, beta: 1.0}
initial:
  u0: {profile: cosine-bump, base: 1.0, amplitude: 0.5}
  w0: {profile: constant, value: 1.0}
  gamma: 0.5
step: {dt_max: 1.0e-3, t_end: 2.0, record_every: 20}
output: {name: small, checkpoint_every: 5, plot: true}
"""

PICARD = """
mode: picard
grid: {extents: [1.0], n: [16]}
params: {delta: 0.0, beta: 2.0}
initial:
  u0: {profile: cosine-bump}
  gamma: 0.5
picard: {T: 0.05, steps: 32}
output: {name: fp}
"""


def write(tmp_path, text, name="cfg.yaml"):
    p = tmp_path / name
    p.write_text(text)
    return p


def test_summary_rejects_duplicate_checks():
    s = RunSummary("x", "simulate", {})
    s.add(Check("a", True, 1.0, 2.0))
    assert s.checks[0].margin == 1.0
    with pytest.raises(ValueError):
        s.add(Check("a", False))
    s.add(Check("b", False))
    assert [c.name for c in s.failures] == ["b"] and not s.ok()


def test_simulate_outputs(tmp_path):
    summary, traj = run_scenario(parse_config(SMALL), tmp_path)
    assert summary.ok(), summary.failures
    names = [c.name for c in summary.checks]
    assert len(names) == len(set(names))
    for expected in ("admissibility", "mass_bound", "lyapunov_monotone", "positivity_floor", "w_envelope", "w_monotone_positive"):
        assert expected in names
    csv_text = (tmp_path / "small_diagnostics.csv").read_text().splitlines()
    assert tuple(csv_text[0].split(",")) == CSV_COLUMNS
    data = read_csv(tmp_path / "small_diagnostics.csv")
    assert data["t"][-1] == pytest.approx(2.0) and len(data["t"]) == len(traj.records)
    js = json.loads((tmp_path / "small_summary.json").read_text())
    assert js["failures"] == [] and js["steps"] == traj.steps
    assert all("margin" in c for c in js["checks"])
    assert (tmp_path / "small_checkpoint.bin").exists()
    assert (tmp_path / "small_decay.png").stat().st_size > 0


def test_resume_from_checkpoint(tmp_path):
    run_scenario(parse_config(SMALL), tmp_path / "a")
    ckpt = tmp_path / "a" / "small_checkpoint.bin"
    text = SMALL.replace("gamma: 0.5", f"gamma: 0.5\n  checkpoint: {ckpt}").replace("t_end: 2.0", "t_end: 3.0")
    summary, traj = run_scenario(parse_config(text), tmp_path / "b")
    assert traj.states[0].t == pytest.approx(2.0) and traj.final.t == pytest.approx(3.0)


def test_bitwise_rerun(tmp_path):
    cfg = parse_config(SMALL)
    run_scenario(cfg, tmp_path / "a", workers=1)
    run_scenario(cfg, tmp_path / "b", workers=2)
    a = (tmp_path / "a" / "small_diagnostics.csv").read_bytes()
    assert a == (tmp_path / "b" / "small_diagnostics.csv").read_bytes()


def test_cli_simulate_exit_zero(tmp_path, capsys):
    cfg = write(tmp_path, SMALL.replace("plot: true", "plot: false"))
    assert main(["simulate", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 0
    out = capsys.readouterr().out
    assert "[PASS] small.lyapunov_monotone" in out and "FAIL" not in out


def test_cli_failing_check_exit_one(tmp_path, capsys):
    # an impossible floor tolerance forces the positivity check to fail
    text = SMALL + "checks: {tol_floor: -1.0}\n"
    assert main(["simulate", "--config", str(write(tmp_path, text)), "--out", str(tmp_path / "o")]) == 1
    assert "[FAIL] small.positivity_floor" in capsys.readouterr().out
    js = json.loads((tmp_path / "o" / "small_summary.json").read_text())
    assert js["failures"] == ["positivity_floor"]


def test_cli_strict_turns_warnings_into_failures(tmp_path):
    text = SMALL.replace("gamma: 0.5", "gamma: 0.0")
    cfg = write(tmp_path, text)
    assert main(["simulate", "--config", str(cfg), "--out", str(tmp_path / "a")]) == 0
    assert main(["simulate", "--config", str(cfg), "--out", str(tmp_path / "b"), "--strict"]) == 1


def test_cli_bad_config_exit_two(tmp_path, capsys):
    cfg = write(tmp_path, "params: {beta: 0.5}\n")
    assert main(["simulate", "--config", str(cfg)]) == 2
    assert "beta must be >= 1" in capsys.readouterr().err


def test_cli_mode_mismatch(tmp_path):
    assert main(["picard", "--config", str(write(tmp_path, SMALL))]) == 2


def test_cli_picard(tmp_path, capsys):
    cfg = write(tmp_path, PICARD)
    assert main(["picard", "--config", str(cfg), "--out", str(tmp_path)]) == 0
    assert "[PASS] fp.picard_vs_integrator" in capsys.readouterr().out
    assert (tmp_path / "fp_picard.csv").read_text().startswith("iterate,residual,contraction_ratio")


def test_cli_plot(tmp_path):
    cfg = write(tmp_path, SMALL.replace("plot: true", "plot: false"))
    out = tmp_path / "o"
    assert main(["plot", "--config", str(cfg), "--out", str(out)]) == 2
    assert main(["simulate", "--config", str(cfg), "--out", str(out)]) == 0
    assert main(["plot", "--config", str(cfg), "--out", str(out)]) == 0
    assert (out / "small_decay.png").exists()


def test_threads_must_be_positive(tmp_path):
    assert main(["simulate", "--config", str(write(tmp_path, SMALL)), "--threads", "0"]) == 2


def test_module_entry_point():
    import subprocess
    import sys

    res = subprocess.run([sys.executable, "-m", "haptotaxis", "--help"], capture_output=True, text=True)
    assert res.returncode == 0
    for cmd in ("simulate", "picard", "verify-all", "plot"):
        assert cmd in res.stdout
