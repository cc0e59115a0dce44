from __future__ import annotations

import logging
from typing import Any

import numpy as np

from app.gap_lab.core.config import default_lab_config
from app.gap_lab.models.schemas import (
    AiryTableParams,
    CorollarySweepParams,
    EigenParams,
    PerturbBatteryParams,
    ReducedProblem,
    RescaleSweepParams,
    RunConfig,
    TheoremParams,
)
from app.gap_lab.services import run_status
from app.gap_lab.services.airy import airy_table
from app.gap_lab.services.asymptotics import corollary_sweep, rescale_sweep, run_perturbation_battery
from app.gap_lab.services.factories import build_solver
from app.gap_lab.services.gap_model import eigenvalue_guess, frame_options, hellmann_feynman_derivative, rescale, solve_reduced
from app.gap_lab.services.theorem import run_theorem
from app.gap_lab.solvers.base import EigenSolver
from app.gap_lab.utils.math_utils import count_sign_changes

logger = logging.getLogger(__name__)


class PipelineService:
    """One method per command; each returns {"rows", "summary"} and optionally "samples"."""

    def __init__(self, cfg: dict[str, Any] | None = None, solver: EigenSolver | None = None) -> None:
        self.cfg = cfg or default_lab_config()
        self.solver = solver

    def _solver(self, backend: str | None = None) -> EigenSolver:
        if self.solver is not None and backend is None:
            return self.solver
        return build_solver(self.cfg, backend)

    def run(self, config: RunConfig) -> dict[str, Any]:
        params = config.params
        logger.info("running %s with %s", config.command, params.to_dict())
        run_status.start_run(config.command, 1)
        try:
            payload = self._dispatch(config)
        except Exception as exc:
            run_status.finish_run(f"{config.command} failed: {exc}")
            raise
        run_status.finish_run(f"{config.command} complete")
        return payload

    def _dispatch(self, config: RunConfig) -> dict[str, Any]:
        params = config.params
        if config.command == "airy-table":
            return self.airy_table(params)
        if config.command == "eigen":
            return self.eigen(params)
        if config.command == "rescale-sweep":
            return self.rescale_sweep(params, config.jobs)
        if config.command == "corollary-sweep":
            return self.corollary_sweep(params, config.jobs)
        if config.command == "perturb-battery":
            return self.perturb_battery(params, config.jobs)
        return self.theorem(params)

    def airy_table(self, params: AiryTableParams) -> dict[str, Any]:
        table = airy_table(params.x_min, params.x_max, params.step)
        keys = list(table)
        rows = [{k: float(table[k][i]) for k in keys} for i in range(table["x"].size)]
        spread = float(np.max(table["wronskian"]) - np.min(table["wronskian"]))
        return {"rows": rows, "summary": {"points": len(rows), "wronskian_spread": spread}}

    def eigen(self, params: EigenParams) -> dict[str, Any]:
        problem = ReducedProblem(n=params.n, phi0=params.phi0, mu=params.mu, t=params.t, j=params.j)
        solver = self._solver(params.backend)
        grid = np.linspace(0.0, params.phi0, params.grid_points)
        pairs = solve_reduced(problem, params.K, solver, params.tol, grid=grid)
        alphas = rescale(problem, pairs, **frame_options(self.cfg)).alpha_tilde if params.t == 0 else (None,) * len(pairs)

        rows = []
        for pair, alpha in zip(pairs, alphas):
            rows.append(
                {
                    "k": pair.k,
                    "eigenvalue": pair.eigenvalue,
                    "guess": eigenvalue_guess(problem, pair.k),
                    "alpha_tilde": alpha,
                    "norm_check": pair.norm_check,
                    "nodes": count_sign_changes(pair.y),
                    "dlambda_dt": hellmann_feynman_derivative(problem, pair),
                }
            )
        summary = {"delta": problem.delta, "effective_mu": problem.effective_mu, "backend": solver.name}
        samples = {"phi": grid, **{f"h_{pair.k}": pair.y for pair in pairs}}
        return {"rows": rows, "summary": summary, "samples": samples}

    def rescale_sweep(self, params: RescaleSweepParams, jobs: int = 1) -> dict[str, Any]:
        result = rescale_sweep(
            params.phi0, params.mu, params.n, params.K, self._solver(), jobs, **frame_options(self.cfg)
        )
        return {"rows": result["rows"], "summary": {"fits": result["fits"]}}

    def corollary_sweep(self, params: CorollarySweepParams, jobs: int = 1) -> dict[str, Any]:
        phi_points = int(self.cfg["rescale"]["phi_grid_points"])
        result = corollary_sweep(params.phi0, params.mu, params.n, self._solver(), jobs, phi_points)
        return {"rows": result["rows"], "summary": {"fits": result["fits"]}}

    def perturb_battery(self, params: PerturbBatteryParams, jobs: int = 1) -> dict[str, Any]:
        spread = float(self.cfg["perturbation"]["gram_spread"])
        result = run_perturbation_battery(params.instances, params.seed, params.max_dim, params.scale, spread, jobs)
        rows = result.pop("rows")
        return {"rows": rows, "summary": result}

    def theorem(self, params: TheoremParams) -> dict[str, Any]:
        report, spec = run_theorem(params.D0, params.n, self.cfg, self._solver(), params.mu_ladder)
        summary = {"report": report.to_dict(), "domain": spec.to_dict()}
        return {"rows": list(report.ladder), "summary": summary}
