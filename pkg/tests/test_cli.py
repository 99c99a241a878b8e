"""Command-line interface: parsing, precedence, exit codes, artifacts."""

import json

import numpy as np
import pytest

from spinbath import ConfigError
from spinbath.cli import main, parse_values


# ---------------------------------------------------------------- parsing

def test_parse_comma_list():
    assert parse_values("0.1, 0.5,1") == (0.1, 0.5, 1.0)


def test_parse_single_value():
    assert parse_values("2.5") == (2.5,)


def test_parse_linear_range():
    assert parse_values("0:6:4") == (0.0, 2.0, 4.0, 6.0)


def test_parse_log_range():
    vals = parse_values("0.01:1:3:log")
    assert np.allclose(vals, (0.01, 0.1, 1.0), rtol=1e-12)


@pytest.mark.parametrize("text", ["1:2", "1:2:3:lin", "a,b", "0:1:0", ""])
def test_parse_rejects_garbage(text):
    with pytest.raises(ConfigError):
        parse_values(text)


# -------------------------------------------------------------- timeseries

def test_timeseries_run_writes_artifacts(tmp_path, capsys):
    out = tmp_path / "run"
    code = main(["timeseries", "--kernel", "delta", "--kbar", "0.5",
                 "--tau-max", "5", "--tau-points", "11",
                 "--out", str(out), "--format", "json"])
    assert code == 0
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["mode"] == "timeseries"
    assert manifest["config"]["kernel"] == "delta"
    assert (out / manifest["files"][0]).exists()
    assert "manifest.json" in capsys.readouterr().out


def test_config_file_with_flag_override(tmp_path):
    cfg_file = tmp_path / "cfg.json"
    cfg_file.write_text(json.dumps({
        "kernel": "delta", "kbar": "0.5", "tau_max": 5,
        "tau_points": 11, "out": str(tmp_path / "a"),
    }))
    code = main(["timeseries", "--config", str(cfg_file),
                 "--tau-points", "21", "--out", str(tmp_path / "b")])
    assert code == 0
    manifest = json.loads((tmp_path / "b" / "manifest.json").read_text())
    assert manifest["config"]["tau_points"] == 21     # flag wins
    assert manifest["config"]["tau_max"] == 5.0       # file value survives


def test_range_syntax_reaches_config(tmp_path):
    out = tmp_path / "run"
    code = main(["timeseries", "--kernel", "delta", "--kbar", "0.1:0.3:3",
                 "--tau-max", "2", "--tau-points", "5", "--out", str(out)])
    assert code == 0
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["config"]["kappa_bars"] == [0.1, 0.2, 0.3]
    assert len(manifest["combinations"]) == 3


# ----------------------------------------------------------------- heatmap

def test_heatmap_run(tmp_path):
    out = tmp_path / "hm"
    code = main(["heatmap", "--kbar", "0.3,1", "--dbar", "0:2:2",
                 "--tau-max", "4", "--tau-points", "9", "--out", str(out)])
    assert code == 0
    grid = np.loadtxt(out / "heatmap_exponential.csv", delimiter=",")
    assert grid.shape == (2, 2)
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["config"]["observables"] == ["blp"]


def test_heatmap_failed_cells_exit_code(tmp_path, capsys, monkeypatch):
    """Failed cells still export the dataset but flag the run via exit 2."""
    from spinbath import harness
    from spinbath.errors import QuadratureDidNotConverge

    def always_fails(traj, config):
        raise QuadratureDidNotConverge("synthetic blow-up", 1.0)

    monkeypatch.setattr(harness, "blp_measure", always_fails)
    out = tmp_path / "hm"
    code = main(["heatmap", "--kbar", "0.5", "--dbar", "1",
                 "--tau-max", "4", "--tau-points", "9", "--out", str(out)])
    assert code == 2
    assert "1 cell(s) failed" in capsys.readouterr().err
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["failures"][0]["row"] == 0


# -------------------------------------------------------------- exit codes

def test_unknown_observable_is_config_error(tmp_path, capsys):
    code = main(["timeseries", "--kernel", "delta", "--kbar", "0.5",
                 "--observables", "entropy", "--out", str(tmp_path)])
    assert code == 1
    assert "configuration error" in capsys.readouterr().err


def test_bad_flag_value_is_config_error(capsys):
    assert main(["timeseries", "--kernel", "nonsense"]) == 1
    assert "configuration error" in capsys.readouterr().err


def test_unknown_config_key_is_config_error(tmp_path, capsys):
    cfg_file = tmp_path / "cfg.json"
    cfg_file.write_text(json.dumps({"kerneltype": "delta"}))
    assert main(["timeseries", "--config", str(cfg_file)]) == 1
    assert "kerneltype" in capsys.readouterr().err


def test_unwritable_output_is_runtime_error(tmp_path, capsys):
    blocker = tmp_path / "occupied"
    blocker.write_text("not a directory")
    code = main(["timeseries", "--kernel", "delta", "--kbar", "0.5",
                 "--tau-max", "2", "--tau-points", "5", "--out", str(blocker)])
    assert code == 2
    assert "run failed" in capsys.readouterr().err


def test_plot_flag_renders_pngs(tmp_path):
    out = tmp_path / "run"
    code = main(["timeseries", "--kernel", "delta", "--kbar", "0.5,1",
                 "--tau-max", "5", "--tau-points", "11",
                 "--observables", "coherence,population",
                 "--out", str(out), "--plot"])
    assert code == 0
    assert list(out.glob("*.png"))
