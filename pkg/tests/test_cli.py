import subprocess
import sys

import pytest

from shiftwave.cli import EXIT_CONFIG, EXIT_NUMERIC, EXIT_OK, main, read_probes
from shiftwave.output import read_csv

LOCAL = """
[model]
mode = local
r2 = 0.25
a = 0.3
b = 2
s = 1.5

[grid]
dx = 0.25

[sim]
T = 20
center = 0
width = 6

[scenario]
id = small-local
sweep_s = 1.5, 2.5
"""

FRONT = """
[model]
a = 0.4
b = 2
s = 0.5

[grid]
z_min = -40
z_max = 40
h = 0.1

[scenario]
id = small-front
"""


@pytest.fixture()
def configs(tmp_path):
    local = tmp_path / "local.ini"
    front = tmp_path / "front.ini"
    local.write_text(LOCAL)
    front.write_text(FRONT)
    return local, front


def test_speeds_writes_csv(tmp_path, configs):
    assert main(["speeds", "--config", str(configs[0]), "--out", str(tmp_path / "o")]) == EXIT_OK
    header, rows = read_csv(tmp_path / "o" / "speeds.csv")
    assert header == ["name", "value", "lambda_argmin", "reason"]
    values = {r[0]: r[1] for r in rows}
    assert values["s_star_prey"] == "2" and float(values["s_hat"]) == pytest.approx(1.0)


def test_speeds_marks_undefined_as_na(tmp_path, configs):
    main(["speeds", "--config", str(configs[0]), "--out", str(tmp_path), "--override", "a=2"])
    _, rows = read_csv(tmp_path / "speeds.csv")
    row = dict((r[0], r) for r in rows)["s_dstar_prey"]
    assert row[1] == "NA" and row[3]


def test_simulate_then_classify(tmp_path, configs):
    out = tmp_path / "sim"
    assert main(["simulate", "--config", str(configs[0]), "--out", str(out)]) == EXIT_OK
    series = read_probes(out / "probes.csv")
    assert series.times[-1] == pytest.approx(20.0)
    assert series.u.shape[1] == series.frames.size > 0
    assert main(["classify", "--config", str(configs[0]), "--out", str(out)]) == EXIT_OK
    header, rows = read_csv(out / "outcome.csv")
    assert header[:4] == ["band", "lo", "hi", "verdict"] and rows
    _, results = read_csv(out / "results.csv")
    assert [r[1] for r in results] == ["simulate", "classify"]


def test_outputs_are_byte_identical(tmp_path, configs):
    for name in ("a", "b"):
        assert main(["simulate", "--config", str(configs[0]), "--out", str(tmp_path / name)]) == EXIT_OK
        main(["speeds", "--config", str(configs[0]), "--out", str(tmp_path / name)])
    for fname in ("probes.csv", "speeds.csv"):
        assert (tmp_path / "a" / fname).read_bytes() == (tmp_path / "b" / fname).read_bytes()
    ra, rb = (read_csv(tmp_path / n / "results.csv")[1] for n in "ab")
    assert [r[:5] for r in ra] == [r[:5] for r in rb]


def test_wave_front(tmp_path, configs):
    assert main(["wave", "--config", str(configs[1]), "--out", str(tmp_path)]) == EXIT_OK
    header, rows = read_csv(tmp_path / "wave_profile.csv")
    assert header == ["z", "phi", "psi", "residual_local"] and len(rows) == 801
    _, summary = read_csv(tmp_path / "wave_summary.csv")
    assert summary[0][5] == "Front" and summary[0][-1] == "true"


def test_wave_below_critical_speed_is_a_regime_error(tmp_path, configs, capsys):
    code = main(["wave", "--config", str(configs[1]), "--out", str(tmp_path), "--override", "a=0.6",
                 "--override", "scenario.wave_type=mixed", "--override", "s=0.3"])
    assert code == EXIT_CONFIG
    assert "does not have any positive solution" in capsys.readouterr().err


def test_unfinished_wave_is_a_numerical_failure(tmp_path, configs):
    code = main(["wave", "--config", str(configs[1]), "--out", str(tmp_path), "--override", "scenario.maxiter=2"])
    assert code == EXIT_NUMERIC
    _, results = read_csv(tmp_path / "results.csv")
    assert results[-1][3] == "failed"


def test_config_errors_exit_2(tmp_path, configs):
    assert main(["speeds", "--config", str(tmp_path / "missing.ini")]) == EXIT_CONFIG
    assert main(["speeds", "--config", str(configs[0]), "--override", "b=0.5"]) == EXIT_CONFIG
    assert main(["speeds"]) == EXIT_CONFIG
    assert main([]) == EXIT_CONFIG


def test_sweep(tmp_path, configs, monkeypatch):
    monkeypatch.setenv("SHIFTWAVE_THREADS", "1")
    assert main(["sweep", "--config", str(configs[0]), "--out", str(tmp_path)]) == EXIT_OK
    header, rows = read_csv(tmp_path / "sweep.csv")
    assert header[:3] == ["s", "status", "verdict"]
    assert [r[0] for r in rows] == ["1.5", "2.5"] and all(r[1] == "ok" for r in rows)


def test_sweep_failure_is_reported_per_row(tmp_path, configs, monkeypatch):
    monkeypatch.setenv("SHIFTWAVE_THREADS", "1")
    code = main(["sweep", "--config", str(configs[0]), "--out", str(tmp_path), "--override", "grid.x_min=-5",
                 "--override", "grid.x_max=5"])
    assert code == EXIT_NUMERIC
    _, rows = read_csv(tmp_path / "sweep.csv")
    assert all(r[1] == "failed" and "too small" in r[5] for r in rows)


def test_bad_thread_setting(tmp_path, configs, monkeypatch):
    monkeypatch.setenv("SHIFTWAVE_THREADS", "many")
    assert main(["sweep", "--config", str(configs[0]), "--out", str(tmp_path)]) == EXIT_CONFIG


def test_accept_reports_broken_config(tmp_path):
    cdir = tmp_path / "configs"
    cdir.mkdir()
    (cdir / "criterion_1.ini").write_text("[kernel.prey]\nfamily = table\nfile = broken.txt\n")
    (cdir / "broken.txt").write_text("0 1 2\n")
    assert main(["accept", "--config-dir", str(cdir), "--out", str(tmp_path), "--only", "1"]) == EXIT_NUMERIC
    _, rows = read_csv(tmp_path / "acceptance.csv")
    assert rows[0][2] == "false" and "ConfigError" in rows[0][-1]


def test_schema_flag(capsys):
    assert main(["--schema"]) == EXIT_OK
    assert "[scenario]" in capsys.readouterr().out


def test_console_entry_point_runs():
    proc = subprocess.run([sys.executable, "-m", "shiftwave.cli", "--schema"], capture_output=True, text=True)
    assert proc.returncode == 0 and "[model]" in proc.stdout
