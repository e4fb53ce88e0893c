import numpy as np
import pytest

from shiftwave import ConfigError
from shiftwave.config import AUTO, describe_schema, load_config, parse_config
from shiftwave.output import fmt, read_csv, write_csv
from shiftwave.scenarios import sweep_speeds

BASE = """
[model]
mode = local
r2 = 0.25
a = 0.3
b = 2
s = 1.5

[grid]
dx = 0.25
"""


def test_defaults_and_types():
    cfg = parse_config(BASE)
    assert cfg.model.local and cfg.model.params.r2 == 0.25
    assert cfg.get("sim", "T") == 400.0
    assert cfg.get("grid", "x_min") == AUTO
    assert cfg.get("scenario", "solvers") == ("monotone",)
    assert cfg.get("sim", "snapshot_times") == ()


def test_duplicate_key_reports_both_lines():
    text = "[model]\na = 0.3\nb = 2\na = 0.4\n"
    with pytest.raises(ConfigError, match="duplicate key 'a' in \\[model\\] at lines 2 and 4"):
        parse_config(text)


@pytest.mark.parametrize("text,match", [
    ("[model]\nspeed = 1\n", "unknown key"),
    ("[modle]\na = 1\n", "unknown section"),
    ("a = 1\n", "outside any section"),
    ("[model]\ns = 0\n", "climate speed must be positive"),
    ("[model]\nb = 1\n", "b must exceed 1"),
    ("[model]\na = lots\n", "a"),
    ("[sim]\nwindow = 1.5\n", "window"),
    ("[scenario]\nsolvers = monotone, newton\n", "unknown solver"),
    ("[grid]\nx_min = -10\n", "both x_min and x_max"),
    ("[kernel.prey]\nfamily = table\nfile = missing.txt\n", "does not exist"),
])
def test_config_errors(text, match):
    with pytest.raises(ConfigError, match=match):
        parse_config(text)


def test_overrides_address_sections_and_model():
    cfg = parse_config(BASE, overrides=["s=0.5", "sim.T=10", "scenario.id=probe"])
    assert cfg.model.params.s == 0.5
    assert cfg.get("sim", "T") == 10.0 and cfg.scenario_id == "probe"
    with pytest.raises(ConfigError, match="section.key=value"):
        parse_config(BASE, overrides=["s"])


def test_relative_speed():
    cfg = parse_config(BASE + "\n[scenario]\ns_relative_to = s_star_pred\ns_offset = 0.25\n")
    assert cfg.model.params.s == pytest.approx(1.25)
    with pytest.raises(ConfigError, match="positive"):
        parse_config(BASE + "\n[scenario]\ns_relative_to = s_star_pred\ns_offset = -2\n")


def test_fingerprint_is_deterministic_and_sensitive():
    a, b = parse_config(BASE), parse_config(BASE)
    assert a.fingerprint() == b.fingerprint() and len(a.fingerprint()) == 16
    assert parse_config(BASE, overrides=["a=0.31"]).fingerprint() != a.fingerprint()


def test_with_speed_changes_model_and_hash():
    cfg = parse_config(BASE)
    other = cfg.with_speed(0.5)
    assert other.model.params.s == 0.5 and cfg.model.params.s == 1.5
    assert other.fingerprint() != cfg.fingerprint()


def test_table_files_resolve_relative_to_config(tmp_path):
    y = np.linspace(-1, 1, 401)
    (tmp_path / "k.txt").write_text("\n".join(f"{a:.17g} {(1 + np.cos(np.pi * a)) / 2:.17g}" for a in y))
    (tmp_path / "bad.txt").write_text("0 1\n0.5\n")
    path = tmp_path / "run.ini"
    path.write_text("[kernel.prey]\nfamily = table\nfile = k.txt\n")
    assert load_config(path).model.kernel_prey.family == "table"
    path.write_text("[kernel.prey]\nfamily = table\nfile = bad.txt\n")
    with pytest.raises(ConfigError, match="two columns"):
        load_config(path)


def test_missing_config_file(tmp_path):
    with pytest.raises(ConfigError, match="cannot read"):
        load_config(tmp_path / "none.ini")


def test_sweep_speed_list_rules(caplog):
    cfg = parse_config(BASE, overrides=["scenario.sweep_s=0.5, 1.5, 1.5, 2.5"])
    assert sweep_speeds(cfg) == [0.5, 1.5, 2.5]
    assert "duplicate" in caplog.text
    with pytest.raises(ConfigError, match="monotone"):
        sweep_speeds(parse_config(BASE, overrides=["scenario.sweep_s=0.5, 2.5, 1.5"]))
    with pytest.raises(ConfigError, match="at least one"):
        sweep_speeds(parse_config(BASE))
    ranged = parse_config(BASE, overrides=["scenario.sweep_range=0.5:2.5:5"])
    assert sweep_speeds(ranged) == pytest.approx([0.5, 1.0, 1.5, 2.0, 2.5])


def test_schema_lists_every_section():
    text = describe_schema()
    for section in ("[model]", "[habitat]", "[kernel.prey]", "[grid]", "[sim]", "[scenario]"):
        assert section in text


def test_csv_format(tmp_path):
    assert fmt(1 / 3) == "0.333333333333"
    assert fmt(None) == "NA" and fmt(True) == "true"
    path = write_csv(tmp_path / "x.csv", ("a", "b"), [[1.0, None], [2.5e-20, "t"]])
    raw = path.read_bytes()
    assert b"\r" not in raw and raw.endswith(b"\n")
    header, rows = read_csv(path)
    assert header == ["a", "b"] and rows[0] == ["1", "NA"]
