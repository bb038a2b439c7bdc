from __future__ import annotations

import json

import pytest

from quasi_spectral.config import RunConfig
from quasi_spectral.errors import ConfigError


def test_defaults():
    cfg = RunConfig.from_dict({})
    assert cfg == RunConfig()
    assert cfg.operator == "quasi"
    assert cfg.bc_outer == "dirichlet"
    assert cfg.k_values == list(range(9))
    assert cfg.ladder == (300, 600, 1200, 2400)


def test_load_yaml(write_config):
    path = write_config(operator="drifted", m=4, modes=[1, 3], pairs_per_mode=2, seed=11)
    cfg = RunConfig.load(path)
    assert cfg.operator == "drifted"
    assert cfg.m == 4
    assert cfg.modes == (1, 3)
    assert cfg.k_values == [1, 2, 3]
    assert cfg.bc_outer == "natural"
    assert cfg.seed == 11


def test_load_json(tmp_path):
    path = tmp_path / "run.json"
    path.write_text(json.dumps({"m": 5, "r_max": 10, "ladder": [100, 300, 900]}), encoding="utf-8")
    cfg = RunConfig.load(path)
    assert cfg.m == 5
    assert cfg.r_max == 10.0
    assert cfg.ladder == (100, 300, 900)


def test_empty_yaml_means_defaults(tmp_path):
    path = tmp_path / "empty.yaml"
    path.write_text("", encoding="utf-8")
    assert RunConfig.load(path) == RunConfig()


def test_missing_file(tmp_path):
    with pytest.raises(ConfigError, match="Cannot read config"):
        RunConfig.load(tmp_path / "nope.yaml")


def test_bad_yaml(tmp_path):
    path = tmp_path / "bad.yaml"
    path.write_text("m: [3,\n", encoding="utf-8")
    with pytest.raises(ConfigError, match="Bad YAML"):
        RunConfig.load(path)


def test_bad_json(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text("{", encoding="utf-8")
    with pytest.raises(ConfigError, match="Bad JSON"):
        RunConfig.load(path)


@pytest.mark.parametrize(
    "raw, message",
    [
        ([1, 2], "expected mapping"),
        ({"colour": "red"}, "Unknown config field: root.colour"),
        ({"m": 2}, "root.m"),
        ({"m": 3.0}, "must be int: root.m"),
        ({"m": True}, "must be int: root.m"),
        ({"modes": [3, 1]}, "root.modes"),
        ({"modes": [0]}, "root.modes"),
        ({"operator": "laplace"}, "root.operator"),
        ({"bc_outer": "neumann"}, "root.bc_outer"),
        ({"r_max": 0}, "root.r_max"),
        ({"r_max": "12"}, "must be a number: root.r_max"),
        ({"n_cells": 4}, "root.n_cells"),
        ({"pairs_per_mode": 0}, "root.pairs_per_mode"),
        ({"merge_tol": 0.0}, "root.merge_tol"),
        ({"output_dir": "  "}, "root.output_dir"),
        ({"seed": -1}, "root.seed"),
        ({"ladder": [300, 600]}, "at least 3 levels: root.ladder"),
        ({"ladder": [300, 600, 1000]}, "root.ladder"),
        ({"ladder": [4, 8, 16]}, "root.ladder"),
        ({"family_size": 0}, "root.family_size"),
    ],
)
def test_rejects_bad_fields(raw, message):
    with pytest.raises(ConfigError, match=message.replace(".", r"\.").replace("[", r"\[")):
        RunConfig.from_dict(raw)


def test_boundary_follows_operator():
    assert RunConfig.from_dict({"operator": "drifted"}).bc_outer == "natural"
    assert RunConfig.from_dict({"operator": "quasi"}).bc_outer == "dirichlet"
    assert RunConfig.from_dict({"operator": "quasi", "bc_outer": "natural"}).bc_outer == "natural"


def test_null_operator_means_quasi():
    assert RunConfig.from_dict({"operator": None}).operator == "quasi"


def test_to_dict_round_trips():
    cfg = RunConfig.from_dict({"operator": "drifted", "modes": [0, 2], "merge_tol": 1e-3, "ladder": [150, 300, 600]})
    assert RunConfig.from_dict(cfg.to_dict()) == cfg
    assert cfg.to_dict()["modes"] == [0, 2]
