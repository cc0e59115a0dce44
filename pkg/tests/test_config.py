from __future__ import annotations

import copy

import pytest
import yaml

from app.gap_lab.core.config import ConfigValidationError, load_lab_config, solver_options, validate_lab_config
from app.gap_lab.core.errors import GapLabError, RangeError, require_range
from app.gap_lab.core.settings import LAB_CONFIG_PATH
from app.gap_lab.services.factories import build_solver
from app.gap_lab.solvers.matrix_oracle import MatrixOracleSolver
from app.gap_lab.solvers.shooting import ShootingSolver


def test_shipped_config_is_valid(lab_cfg):
    validate_lab_config(lab_cfg)
    assert lab_cfg["solver"]["method"] == "DOP853"
    assert lab_cfg["theorem"]["mu_ladder"] == [1e4, 1e5, 1e6, 1e7]


def test_missing_key_is_named(lab_cfg):
    cfg = copy.deepcopy(lab_cfg)
    del cfg["solver"]["tol"]
    with pytest.raises(ConfigValidationError, match="solver.tol"):
        validate_lab_config(cfg)


@pytest.mark.parametrize(
    "section,key,value",
    [
        ("solver", "backend", "bogus"),
        ("solver", "tol", 1.0),
        ("theorem", "mu_ladder", []),
        ("theorem", "boundary_samples", 8),
        ("output", "default_format", "xml"),
    ],
)
def test_invalid_values_rejected(lab_cfg, section, key, value):
    cfg = copy.deepcopy(lab_cfg)
    cfg[section][key] = value
    with pytest.raises(ConfigValidationError):
        validate_lab_config(cfg)


def test_unsigned_exponents_in_ladder_become_floats(tmp_path):
    text = LAB_CONFIG_PATH.read_text()
    text = text.replace("[1.0e+4, 1.0e+5, 1.0e+6, 1.0e+7]", "[1.0e4, 1.0e5, 1.0e6, 1.0e7]")
    path = tmp_path / "lab.yaml"
    path.write_text(text)
    assert yaml.safe_load(text)["theorem"]["mu_ladder"][0] == "1.0e4"
    ladder = load_lab_config(path)["theorem"]["mu_ladder"]
    assert ladder == [1e4, 1e5, 1e6, 1e7]
    assert all(isinstance(mu, float) for mu in ladder)


def test_non_numeric_ladder_rejected(lab_cfg):
    cfg = copy.deepcopy(lab_cfg)
    cfg["theorem"]["mu_ladder"] = [1e4, "lots"]
    with pytest.raises(ConfigValidationError, match="numbers"):
        validate_lab_config(cfg)


def test_config_path_from_environment(tmp_path, monkeypatch, lab_cfg):
    cfg = copy.deepcopy(lab_cfg)
    cfg["solver"]["grid_points"] = 1024
    path = tmp_path / "lab.yaml"
    path.write_text(yaml.safe_dump(cfg))
    monkeypatch.setenv("GAP_LAB_CONFIG", str(path))
    assert load_lab_config()["solver"]["grid_points"] == 1024


def test_missing_config_file(tmp_path):
    with pytest.raises(ConfigValidationError):
        load_lab_config(tmp_path / "nope.yaml")


def test_solver_factory(lab_cfg):
    shooting = build_solver(lab_cfg)
    assert isinstance(shooting, ShootingSolver)
    assert shooting.rtol == lab_cfg["solver"]["rtol"]
    assert shooting.grid_points == lab_cfg["solver"]["grid_points"]
    matrix = build_solver(lab_cfg, backend="matrix")
    assert isinstance(matrix, MatrixOracleSolver)
    assert matrix.grid_size == lab_cfg["solver"]["oracle_grid"]
    assert solver_options(lab_cfg)["method"] == "DOP853"


def test_require_range_diagnostics():
    with pytest.raises(RangeError) as info:
        require_range("k", 0, 1, 10)
    assert info.value.to_dict()["diagnostics"] == {"name": "k", "value": 0, "low": 1, "high": 10}
    with pytest.raises(RangeError):
        require_range("x", float("nan"), 0.0, 1.0)
    assert isinstance(info.value, GapLabError) and isinstance(info.value, ValueError)
