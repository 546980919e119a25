import shutil
import subprocess

import pytest

from memlife import harness
from memlife.cli import main


@pytest.fixture(autouse=True)
def _out(monkeypatch, tmp_path):
    monkeypatch.setenv(harness.OUTPUT_ENV, str(tmp_path / "out"))
    return tmp_path / "out"


def test_run_table1_markdown(capsys, _out):
    code = main(["run", "--regime", "premise_realization",
                 "--policy", "stagemem,confidence_only,single_state,single_layer",
                 "--episodes", "5"])
    assert code == 0
    md = capsys.readouterr().out
    assert "| Method |" in md and "StageMem" in md and "Single-layer" in md
    assert (_out / "premise_realization.csv").exists() and (_out / "report.md").exists()


def test_run_capacity_range_csv(_out):
    assert main(["run", "--regime", "heavy", "--capacity", "very_tight..very_roomy",
                 "--policy", "stagemem", "--episodes", "2", "--format", "csv"]) == 0
    lines = (_out / "heavy.csv").read_text().splitlines()
    assert len(lines) == 6 and "capacity_setting=very_roomy" in lines[-1]
    assert not (_out / "report.md").exists()


def test_out_flag_loses_to_env(tmp_path, _out):
    assert main(["run", "--table", "table4", "--episodes", "2", "--out",
                 str(tmp_path / "flag")]) == 0
    assert (_out / "quadrant.csv").exists() and not (tmp_path / "flag").exists()


def test_run_with_check_passes(capsys):
    assert main(["run", "--table", "table1", "--episodes", "10", "--check"]) == 0
    assert "0 failed" in capsys.readouterr().err


def test_set_override_reaches_the_run(capsys):
    assert main(["run", "--regime", "premise_realization", "--policy", "stagemem",
                 "--episodes", "3", "--set", "dynamics.fixed_init_strength=0.3",
                 "--format", "csv"]) == 0
    assert main(["run", "--regime", "premise_realization", "--policy", "stagemem",
                 "--episodes", "3", "--set", "dynamics.fixed_init_strength=0.3", "--check"]) == 1


def test_config_file(tmp_path, capsys):
    cfg = tmp_path / "c.cfg"
    cfg.write_text("regimes = gate_strength\nepisodes = 2  # quick\n")
    assert main(["run", "--config", str(cfg)]) == 0
    assert "Gate, strength and lifecycle" in capsys.readouterr().out


def test_check_with_disabled_promotion_fails(capsys):
    assert main(["check", "--episodes", "2", "--set", "thresholds.tau_r=1.01"]) == 1
    assert "FAIL" in capsys.readouterr().out


def test_check_passes_on_packaged_goldens(capsys):
    # fractional cells are pinned at the default 100 episodes
    assert main(["check"]) == 0


def test_check_missing_golden(tmp_path):
    assert main(["check", "--golden", str(tmp_path / "absent.txt")]) == 2


def test_sweep_front_door(capsys, _out):
    assert main(["sweep", "front_door", "--grid", "0.45:0.95:0.05", "--episodes", "2"]) == 0
    out = capsys.readouterr().out
    assert "operating points (FinalLoad, ImpRet): (0.0000, 0.0000), (0.0769, 0.0000), " \
           "(1.0000, 1.0000)" in out
    assert (_out / "sweep_front_door.csv").read_text().startswith("tau,")


@pytest.mark.parametrize("argv", [
    ["run", "--regime", "nope"],
    ["run", "--regime", "heavy", "--policy", "nope"],
    ["run", "--table", "nope"],
    ["run", "--regime", "heavy", "--capacity", "huge"],
    ["run", "--regime", "heavy", "--set", "bogus"],
    ["sweep", "front_door", "--grid", "1:0"],
    ["dump-trace", "--regime", "heavy", "--policy", "stagemem", "--variant", "capacity_setting=x"],
    ["run", "--config", "/nonexistent/file.cfg", "--regime", "heavy"],
    ["frobnicate"],
    [],
])
def test_config_errors_exit_2(argv, capsys):
    assert main(argv) == 2


def test_list(capsys):
    assert main(["list"]) == 0
    out = capsys.readouterr().out
    for word in ("premise_realization", "stagemem", "front_door", "table5", "very_roomy"):
        assert word in out


def test_dump_trace(capsys):
    assert main(["dump-trace", "--regime", "heavy", "--policy", "front_door",
                 "--variant", "capacity_setting=tight", "--seed", "2", "--stream"]) == 0
    out = capsys.readouterr().out
    assert out.startswith("# regime=heavy policy=front_door seed=2")
    assert "# stream" in out and "# metrics " in out


@pytest.mark.skipif(shutil.which("memlife") is None, reason="console script not installed")
def test_console_script(tmp_path):
    proc = subprocess.run(["memlife", "list"], capture_output=True, text=True, check=False)
    assert proc.returncode == 0 and "regimes:" in proc.stdout
    proc = subprocess.run(["memlife", "run", "--regime", "nope"], capture_output=True, text=True)
    assert proc.returncode == 2 and "unknown regime" in proc.stderr
