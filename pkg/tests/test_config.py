import math
from dataclasses import replace

import pytest

from deltacone.config import OUTPUT_DIR_ENV, RunConfig
from deltacone.exceptions import ConfigError

TWO_PI = 2.0 * math.pi


def test_defaults_are_valid():
    config = RunConfig.from_mapping({"command": "critical-alpha"})
    assert config.geometry.L == math.pi
    assert config.geometry.R == (1.0,)
    assert (config.numerics.n_r, config.numerics.n_s) == (16, 32)
    assert config.output.format == "csv"


def test_text_round_trip():
    config = RunConfig.from_mapping(
        {
            "command": "isoperimetric",
            "L": "3.14159",
            "R": "0.5, 1, 2",
            "eps": "0.05",
            "k": "3",
            "alpha": "1.5",
            "alpha_mult": "0.5,2",
            "single_thread": "true",
            "path": "out/iso.csv",
        }
    )
    assert config.geometry.R == (0.5, 1.0, 2.0)
    assert config.physics.alpha_mult == (0.5, 2.0)
    assert RunConfig.from_text(config.to_text()) == config


def test_typed_values():
    config = RunConfig.from_mapping({"command": "ground-state", "R": 2.0, "n_r": 8, "single_thread": True})
    assert config.geometry.R == (2.0,)
    assert config.numerics.n_r == 8
    assert config.output.single_thread is True


def test_length_near_great_circle_is_snapped():
    config = RunConfig.from_mapping({"command": "critical-alpha", "L": "6.2832"})
    assert config.geometry.L == TWO_PI


def test_flat_lists_every_key():
    flat = RunConfig.from_mapping({"command": "knot-energy"}).flat()
    assert flat["command"] == "knot-energy"
    assert {"L", "n_quad", "f_c", "path", "matrix"} <= set(flat)


@pytest.mark.parametrize(
    "values",
    [
        {},
        {"command": "bogus"},
        {"command": "critical-alpha", "L": "7"},
        {"command": "critical-alpha", "L": "0"},
        {"command": "critical-alpha", "R": "2,1"},
        {"command": "critical-alpha", "R": "-1"},
        {"command": "critical-alpha", "n_r": "3"},
        {"command": "critical-alpha", "n_r": "4.5"},
        {"command": "critical-alpha", "n_s": "x"},
        {"command": "critical-alpha", "grading": "0.5"},
        {"command": "critical-alpha", "k": "1"},
        {"command": "critical-alpha", "eps": "-0.1"},
        {"command": "critical-alpha", "loop": "square"},
        {"command": "critical-alpha", "loop": "user-supplied-samples"},
        {"command": "critical-alpha", "format": "xml"},
        {"command": "critical-alpha", "workers": "0"},
        {"command": "critical-alpha", "single_thread": "maybe"},
        {"command": "critical-alpha", "colour": "blue"},
        {"command": "convergence", "levels": "2"},
        {"command": "limit-study"},
        {"command": "limit-study", "alpha": "1", "L": "6.2832"},
        {"command": "ground-state", "alpha_mult": ""},
        {"command": "knot-energy", "f_b": "0", "f_c": "0"},
    ],
)
def test_invalid(values):
    with pytest.raises(ConfigError):
        RunConfig.from_mapping(values)


def test_file_with_overrides(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text("command = ground-state\n# grid\nn_r = 4   # coarse\nn_s = 8\nalpha = 2.0\n")
    config = RunConfig.from_file(path, {"n_r": "12", "format": None})
    assert config.command == "ground-state"
    assert (config.numerics.n_r, config.numerics.n_s) == (12, 8)
    assert config.physics.alpha == (2.0,)
    assert config.output.format == "csv"


def test_malformed_file(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text("command = ground-state\njust words\n")
    with pytest.raises(ConfigError):
        RunConfig.from_file(path)
    with pytest.raises(ConfigError):
        RunConfig.from_file(tmp_path / "missing.cfg")


def test_output_path(tmp_path, monkeypatch):
    monkeypatch.delenv(OUTPUT_DIR_ENV, raising=False)
    config = RunConfig.from_mapping({"command": "critical-alpha", "format": "json"})
    assert str(config.output_path()) == "critical-alpha.json"
    config = replace(config, output=replace(config.output, path="results/a.json"))
    assert str(config.output_path()) == "results/a.json"
    monkeypatch.setenv(OUTPUT_DIR_ENV, str(tmp_path))
    assert config.output_path() == tmp_path / "a.json"
