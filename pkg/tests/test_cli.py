import csv
import json
import subprocess
import sys
from pathlib import Path

import pytest

from timebin import cli
from timebin.errors import ConfigError

GOLDEN = Path(__file__).parent / "golden"
CONFIGS = Path(__file__).parent.parent / "configs"


def write(tmp_path, text, name="cfg.toml"):
    p = tmp_path / name
    p.write_text(text)
    return p


def config_error(tmp_path, text):
    with pytest.raises(ConfigError) as exc:
        cli.parse_config(write(tmp_path, text))
    return exc.value


def test_out_of_range_eta_names_field(tmp_path):
    err = config_error(tmp_path, 'scenario = "franson"\n[source]\neta = 1.3\n')
    assert err.field == "source.eta"
    assert "eta" in str(err)


def test_missing_scenario(tmp_path):
    assert config_error(tmp_path, "seed = 1\n").field == "scenario"


def test_unknown_scenario(tmp_path):
    assert config_error(tmp_path, 'scenario = "teleport"\n').field == "scenario"


def test_unknown_key_rejected(tmp_path):
    err = config_error(tmp_path, 'scenario = "qkd"\n[alice]\nphse = 0.1\n')
    assert err.field == "alice.phse"


def test_unknown_detector_rejected(tmp_path):
    err = config_error(tmp_path, 'scenario = "franson"\n[detectors.D9]\nefficiency = 0.5\n')
    assert err.field == "detectors.D9"


def test_detector_value_checked(tmp_path):
    err = config_error(tmp_path, 'scenario = "bsa"\n[detectors.D1]\ndark_prob = 2.0\n')
    assert err.field == "detectors.D1.dark_prob"


def test_bad_mode_and_trials(tmp_path):
    assert config_error(tmp_path, 'scenario = "bsa"\nmode = "fast"\n').field == "mode"
    assert config_error(tmp_path, 'scenario = "bsa"\ntrials = 0\n').field == "trials"


def test_eberhard_grid_checked(tmp_path):
    err = config_error(tmp_path, 'scenario = "eberhard"\n[eberhard]\neta_grid = [0.0]\nefficiency_grid = [1.0]\n')
    assert err.field == "eberhard.eta_grid"


def test_invalid_toml(tmp_path):
    assert config_error(tmp_path, "scenario = \n").field == "path"


@pytest.mark.parametrize("path", sorted(CONFIGS.glob("*.toml")), ids=lambda p: p.stem)
def test_shipped_configs_validate_and_round_trip(path):
    m = cli.parse_config(path)
    again = cli.manifest_from_mapping(m.to_mapping())
    assert again == m
    assert cli.build_kwargs(again) == cli.build_kwargs(m)


def test_main_exit_codes(tmp_path, capsys):
    good = write(tmp_path, 'scenario = "bsa"\n', "good.toml")
    bad = write(tmp_path, 'scenario = "franson"\n[source]\neta = 1.3\n', "bad.toml")
    assert cli.main(["validate", str(good)]) == cli.EXIT_OK
    assert cli.main(["validate", str(bad)]) == cli.EXIT_CONFIG
    assert "source.eta" in capsys.readouterr().err
    assert cli.main(["run", str(tmp_path / "missing.toml")]) == cli.EXIT_CONFIG
    assert cli.main(["list-scenarios"]) == cli.EXIT_OK


def test_runtime_failure_exit_code(tmp_path, monkeypatch):
    def boom(**_):
        raise RuntimeError("boom")

    monkeypatch.setitem(cli.SCENARIOS, "bsa", boom)
    cfg = write(tmp_path, 'scenario = "bsa"\n')
    assert cli.main(["run", str(cfg), "--out", str(tmp_path / "o")]) == cli.EXIT_RUNTIME


@pytest.mark.parametrize("name", ["bsa", "franson"])
def test_golden_outputs(tmp_path, name):
    out = tmp_path / name
    assert cli.main(["run", str(GOLDEN / f"{name}.toml"), "--out", str(out)]) == 0
    assert (out / "results.jsonl").read_bytes() == (GOLDEN / f"{name}_results.jsonl").read_bytes()
    if name == "franson":
        assert (out / "franson_plot.csv").read_bytes() == (GOLDEN / "franson_plot.csv").read_bytes()


def test_franson_csv_schema(tmp_path):
    cli.main(["run", str(GOLDEN / "franson.toml"), "--out", str(tmp_path)])
    rows = list(csv.DictReader((tmp_path / "franson_plot.csv").open()))
    assert list(rows[0]) == ["phase", "coincidence_rate", "fit_visibility"]
    assert len(rows) == 8


def test_eberhard_csv_schema(tmp_path):
    cfg = write(tmp_path, 'scenario = "eberhard"\n[eberhard]\neta_grid = [0.5]\nefficiency_grid = [0.8, 1.0]\nrestarts = 2\n')
    assert cli.main(["run", str(cfg), "--out", str(tmp_path / "o")]) == 0
    rows = list(csv.DictReader((tmp_path / "o" / "eberhard_plot.csv").open()))
    assert list(rows[0]) == ["eta", "efficiency", "J", "violated"]
    assert [r["violated"] for r in rows] == ["false", "true"]


def test_results_record_is_strict_json(tmp_path):
    cfg = write(tmp_path, 'scenario = "qkd"\n[detectors.default]\ngate_bins = [1]\n')
    cli.main(["run", str(cfg), "--out", str(tmp_path / "o")])
    rec = json.loads((tmp_path / "o" / "results.jsonl").read_text())
    assert rec["manifest"]["scenario"] == "qkd"
    assert rec["metrics"]["qber_time"] is None
    assert rec["units"]["bin_width_ns"] == cli.BIN_WIDTH_NS


def test_mc_rerun_byte_identical_across_workers(tmp_path):
    cfg = write(tmp_path, 'scenario = "franson"\nmode = "mc"\nseed = 9\ntrials = 20000\n[analyzer]\nnum_phases = 4\n')
    outs = []
    for k, w in enumerate((1, 1, 3)):
        d = tmp_path / f"o{k}"
        assert cli.main(["run", str(cfg), "--out", str(d), "--workers", str(w)]) == 0
        outs.append(((d / "results.jsonl").read_bytes(), (d / "franson_plot.csv").read_bytes()))
    assert outs[0] == outs[1] == outs[2]


def test_cli_overrides(tmp_path):
    cfg = write(tmp_path, 'scenario = "bsa"\n')
    cli.main(["run", str(cfg), "--mode", "mc", "--trials", "5000", "--seed", "4", "--out", str(tmp_path / "o")])
    rec = json.loads((tmp_path / "o" / "results.jsonl").read_text())
    assert (rec["mode"], rec["trials"], rec["seed"]) == ("montecarlo", 5000, 4)


def test_module_entry_point(tmp_path):
    cfg = write(tmp_path, 'scenario = "bsa"\n')
    proc = subprocess.run([sys.executable, "-m", "timebin", "validate", str(cfg)], capture_output=True, text=True)
    assert proc.returncode == 0 and proc.stdout.startswith("ok:")
