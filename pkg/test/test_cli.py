import json
import math
import os

import pytest

from lattice_gravimeter import cli
from lattice_gravimeter.config import ENVVAR_CONFIG
from lattice_gravimeter.metrology import report

CONFIG_DIR = os.path.join(os.path.dirname(__file__), "..", "etc", "config")
EXAMPLE_SETTINGS = os.path.abspath(os.path.join(CONFIG_DIR, "config.py"))


def example(name):
    return os.path.join(CONFIG_DIR, name)


def write_config(tmp_path, **sections):
    with open(example("rb87.json")) as f:
        raw = json.load(f)
    raw.pop("out_dir")
    raw.update(sections)
    path = tmp_path / "run.json"
    path.write_text(json.dumps(raw))
    return str(path)


def test_derive(tmp_path):
    assert cli.run(example("rb87.json"), "derive", out_dir=str(tmp_path)) == cli.EXIT_OK
    derived = json.loads((tmp_path / "derive.json").read_text())
    assert derived["derived"]["shift_time"] == pytest.approx(13.4e-3, rel=0.01)
    assert derived["warnings"] == []
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    assert manifest["command"] == "derive"
    assert manifest["artifacts"]["derive"].endswith("derive.json")


def test_validate(tmp_path, monkeypatch):
    monkeypatch.delenv(ENVVAR_CONFIG, raising=False)
    assert cli.run(example("scaled.json"), "validate", out_dir=str(tmp_path)) == cli.EXIT_OK
    validation = json.loads((tmp_path / "validation.json").read_text())
    assert validation["passed"]
    assert validation["cases"] == 51
    assert validation["worst"] <= 1e-10


def test_validate_follows_settings_file(tmp_path, monkeypatch):
    monkeypatch.setenv(ENVVAR_CONFIG, EXAMPLE_SETTINGS)
    assert cli.run(example("scaled.json"), "validate", out_dir=str(tmp_path)) == cli.EXIT_OK
    assert json.loads((tmp_path / "validation.json").read_text())["cases"] == 21


def test_oracle_cap_from_settings_file(tmp_path, monkeypatch):
    settings = tmp_path / "settings.py"
    settings.write_text("ORACLE_CAP = 3\n")
    monkeypatch.setenv(ENVVAR_CONFIG, str(settings))
    assert cli.run(example("scaled.json"), "validate", out_dir=str(tmp_path)) == cli.EXIT_CONFIG_ERROR
    assert not (tmp_path / "validation.json").exists()


def test_single_atom_fringe(tmp_path):
    grid = [0.0, math.pi / 3, math.pi / 2, math.pi]
    path = write_config(tmp_path, state={"kind": "css", "N": 1}, fringe={"phi_grid": grid})
    assert cli.run(path, "fringe", out_dir=str(tmp_path)) == cli.EXIT_OK
    table = report.read_csv(str(tmp_path / "fringe.csv"))
    assert list(table["phi"]) == grid
    for phi, mean in zip(table["phi"], table["mean"]):
        assert mean == pytest.approx(0.5 * math.cos(phi), abs=1e-15)


def test_scaling(tmp_path):
    path = write_config(tmp_path, scaling={"N_list": [10, 100, 1000]})
    assert cli.run(path, "scaling", out_dir=str(tmp_path)) == cli.EXIT_OK
    table = report.read_csv(str(tmp_path / "scaling.csv"))
    assert list(table.columns) == ["N", "dg_over_g"]
    fit = json.loads((tmp_path / "scaling_fit.json").read_text())
    assert fit["kind"] == "css"
    assert fit["fit"]["exponent"] == pytest.approx(-0.5, abs=1e-9)


def test_robustness(tmp_path):
    assert cli.run(example("scaled.json"), "robustness", out_dir=str(tmp_path)) == cli.EXIT_OK
    table = report.read_csv(str(tmp_path / "robustness.csv"))
    assert len(table) == 5
    assert (table["shift"].abs() < 1e-10).all()


def test_missing_key(tmp_path):
    path = write_config(tmp_path, state={"kind": "css"})
    assert cli.run(path, "derive", out_dir=str(tmp_path)) == cli.EXIT_CONFIG_ERROR
    assert not (tmp_path / "manifest.json").exists()


def test_non_numeric_twist(tmp_path):
    path = write_config(tmp_path, state={"kind": "sss", "N": 4, "mu": "abc"})
    assert cli.run(path, "derive", out_dir=str(tmp_path)) == cli.EXIT_CONFIG_ERROR


def test_robustness_without_hold_time(tmp_path):
    with open(example("scaled.json")) as f:
        params = json.load(f)["params"]
    params["hold_time"] = 0.0
    path = write_config(tmp_path, params=params)
    assert cli.run(path, "robustness", out_dir=str(tmp_path)) == cli.EXIT_CONFIG_ERROR


def test_validate_above_oracle_cap(tmp_path):
    path = write_config(tmp_path, state={"kind": "css", "N": 9})
    assert cli.run(path, "validate", out_dir=str(tmp_path)) == cli.EXIT_CONFIG_ERROR


def test_invalid_params(tmp_path):
    with open(example("rb87.json")) as f:
        params = json.load(f)["params"]
    params["shift_sites"] = 0
    path = write_config(tmp_path, params=params)
    assert cli.run(path, "derive", out_dir=str(tmp_path)) == cli.EXIT_CONFIG_ERROR


def test_unknown_command(tmp_path):
    assert cli.run(example("rb87.json"), "plot", out_dir=str(tmp_path)) == cli.EXIT_CONFIG_ERROR


def test_missing_config(tmp_path):
    assert cli.run(str(tmp_path / "nothing.json"), "derive", out_dir=str(tmp_path)) == cli.EXIT_CONFIG_ERROR


def test_cli(tmp_path):
    with pytest.raises(SystemExit) as e:
        cli.main(["--config", example("rb87.json"), "--command", "derive", "--out", str(tmp_path), "--seed", "7"])
    assert e.value.code == cli.EXIT_OK
    assert json.loads((tmp_path / "manifest.json").read_text())["seed"] == 7


def test_cli_requires_command():
    with pytest.raises(SystemExit) as e:
        cli.main(["--config", example("rb87.json")])
    assert e.value.code == 2
