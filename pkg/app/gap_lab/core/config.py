from __future__ import annotations

from functools import lru_cache
from pathlib import Path
from typing import Any

import yaml

from .settings import lab_config_path


class ConfigValidationError(ValueError):
    pass


def _required_keys() -> dict[str, list[str]]:
    return {
        "root": ["solver", "airy", "rescale", "perturbation", "theorem", "sweeps", "output"],
        "solver": ["backend", "method", "rtol", "atol", "tol", "grid_points", "max_bracket_expansions", "oracle_grid"],
        "airy": ["grid_step", "x_max"],
        "rescale": ["x_cap", "grid_step", "phi_grid_points"],
        "perturbation": ["instances", "max_dim", "scale", "gram_spread", "seed"],
        "theorem": ["mu_ladder", "t_factor", "t_refinement", "diameter_tol", "boundary_samples", "higher_gap_K"],
        "sweeps": ["jobs"],
        "output": ["schema_version", "default_format"],
    }


def validate_lab_config(cfg: dict[str, Any]) -> None:
    required = _required_keys()

    for key in required["root"]:
        if key not in cfg:
            raise ConfigValidationError(f"Missing root key: {key}")
        if not isinstance(cfg[key], dict):
            raise ConfigValidationError(f"Section {key} must be a mapping")

    for section, keys in required.items():
        if section == "root":
            continue
        for key in keys:
            if key not in cfg[section]:
                raise ConfigValidationError(f"Missing {section}.{key}")

    solver = cfg["solver"]
    if str(solver["backend"]).strip().lower() not in {"shooting", "matrix"}:
        raise ConfigValidationError("solver.backend must be shooting or matrix")
    for key in ("rtol", "atol"):
        if not 0 < float(solver[key]) < 1e-3:
            raise ConfigValidationError(f"solver.{key} must be in (0, 1e-3)")
    if not 1e-13 <= float(solver["tol"]) <= 1e-4:
        raise ConfigValidationError("solver.tol must be in [1e-13, 1e-4]")
    if int(solver["grid_points"]) < 16:
        raise ConfigValidationError("solver.grid_points must be >= 16")
    if int(solver["oracle_grid"]) < 64:
        raise ConfigValidationError("solver.oracle_grid must be >= 64")

    if float(cfg["airy"]["grid_step"]) <= 0:
        raise ConfigValidationError("airy.grid_step must be > 0")
    if float(cfg["rescale"]["grid_step"]) <= 0:
        raise ConfigValidationError("rescale.grid_step must be > 0")

    ladder = cfg["theorem"]["mu_ladder"]
    if not isinstance(ladder, list) or not ladder:
        raise ConfigValidationError("theorem.mu_ladder must be a non-empty list")
    try:
        ladder = [float(mu) for mu in ladder]
    except (TypeError, ValueError) as exc:
        raise ConfigValidationError("theorem.mu_ladder entries must be numbers") from exc
    if any(not mu > 0 for mu in ladder):
        raise ConfigValidationError("theorem.mu_ladder entries must be > 0")
    # YAML 1.1 reads 1.0e4 as a string
    cfg["theorem"]["mu_ladder"] = ladder
    if int(cfg["theorem"]["boundary_samples"]) < 64:
        raise ConfigValidationError("theorem.boundary_samples must be >= 64")
    if int(cfg["sweeps"]["jobs"]) < 1:
        raise ConfigValidationError("sweeps.jobs must be >= 1")
    if str(cfg["output"]["default_format"]) not in {"csv", "json"}:
        raise ConfigValidationError("output.default_format must be csv or json")


def load_lab_config(path: Path | None = None) -> dict[str, Any]:
    path = path or lab_config_path()
    if not path.exists():
        raise ConfigValidationError(f"Lab config not found: {path}")

    with path.open("r", encoding="utf-8") as f:
        data = yaml.safe_load(f)

    if not isinstance(data, dict):
        raise ConfigValidationError("Lab config YAML must parse into a dictionary")

    validate_lab_config(data)
    return data


@lru_cache(maxsize=1)
def default_lab_config() -> dict[str, Any]:
    """Cached load of the file pointed to by GAP_LAB_CONFIG or config/lab.yaml."""
    return load_lab_config()


def solver_options(cfg: dict[str, Any] | None = None) -> dict[str, Any]:
    solver = (cfg or default_lab_config()).get("solver", {})
    return {
        "method": str(solver.get("method", "DOP853")),
        "rtol": float(solver.get("rtol", 1e-12)),
        "atol": float(solver.get("atol", 1e-12)),
        "max_bracket_expansions": int(solver.get("max_bracket_expansions", 60)),
    }
