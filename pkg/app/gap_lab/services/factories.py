from __future__ import annotations

from typing import Any

from app.gap_lab.core.config import default_lab_config, solver_options
from app.gap_lab.solvers.base import EigenSolver
from app.gap_lab.solvers.matrix_oracle import MatrixOracleSolver
from app.gap_lab.solvers.shooting import ShootingSolver


def build_solver(cfg: dict[str, Any] | None = None, backend: str | None = None) -> EigenSolver:
    cfg = cfg or default_lab_config()
    solver_cfg = cfg.get("solver", {})
    solver_type = str(backend or solver_cfg.get("backend", "shooting")).strip().lower()

    if solver_type == "matrix":
        return MatrixOracleSolver(grid_size=int(solver_cfg.get("oracle_grid", 8192)))

    return ShootingSolver(grid_points=int(solver_cfg.get("grid_points", 4096)), **solver_options(cfg))
