"""Reduced eigenproblems on the wedge family and their Airy rescaling.

Separating u = sin(j sqrt(mu) log r) h(phi) in the polar wedge gives, in
self-adjoint form,

    -(cos^{2-n} h')' + (j^2 mu cos^{2-n} + t P cos^{-n}) h = lambda cos^{-n} h

on (0, phi0), where P(phi) = artanh(sin phi) is the distance to the geodesic
{phi = 0}. Near phi0 the substitution phi = phi0 - delta^{1/3} x turns the
problem into a small perturbation of -f'' + x f on the half line.
"""

from __future__ import annotations

import logging
import math
from functools import partial
from typing import Any

import numpy as np
from scipy.interpolate import CubicSpline

from app.gap_lab.core.config import default_lab_config
from app.gap_lab.core.errors import ContractError, RangeError, ShapeError
from app.gap_lab.models.schemas import Eigenpair, ReducedProblem, RescaledFrame, SLProblem
from app.gap_lab.services.airy import MAX_ZEROS, airy_zeros
from app.gap_lab.solvers.base import EigenSolver
from app.gap_lab.solvers.quadrature import SampledFunction, simpson_integral
from app.gap_lab.utils.math_utils import first_derivative, grid_step, second_derivative, uniform_grid

logger = logging.getLogger(__name__)

HALF_PI = 0.5 * math.pi


# potential


def _check_angle(phi: Any) -> np.ndarray:
    values = np.asarray(phi, dtype=float)
    if np.any(~np.isfinite(values)) or np.any(values < 0.0) or np.any(values >= HALF_PI):
        raise RangeError("phi must lie in [0, pi/2)", phi=float(np.max(values)) if values.size else None)
    return values


def eval_potential(phi: Any) -> Any:
    """P(phi) = artanh(sin phi), the hyperbolic distance to {phi = 0}."""
    values = np.arctanh(np.sin(_check_angle(phi)))
    return float(values) if values.ndim == 0 else values


def eval_potential_derivative(phi: Any) -> Any:
    values = 1.0 / np.cos(_check_angle(phi))
    return float(values) if values.ndim == 0 else values


# coefficients; module-level so problems built from them stay picklable


def _p(n: int, phi: Any) -> Any:
    return np.cos(phi) ** (2 - n)


def _w(n: int, phi: Any) -> Any:
    return np.cos(phi) ** (-n)


def _q0(n: int, mu_eff: float, t: float, phi: Any) -> Any:
    c = np.cos(phi)
    q = mu_eff * c ** (2 - n)
    if t:
        q = q + t * np.arctanh(np.sin(phi)) * c ** (-n)
    return q


def _airy_zero(k: int) -> float:
    if k <= MAX_ZEROS:
        return airy_zeros(k).a[-1]
    return (3.0 * math.pi * (4 * k - 1) / 8.0) ** (2.0 / 3.0)


def eigenvalue_guess(problem: ReducedProblem, k: int) -> float:
    """Leading-order lambda_k: mu cos^2(phi0)(1 + 2 tan(phi0) a_k delta^{1/3}) plus t P(phi0)."""
    cos2 = math.cos(problem.phi0) ** 2
    tan0 = math.tan(problem.phi0)
    lam = problem.effective_mu * cos2 * (1.0 + 2.0 * tan0 * _airy_zero(k) * problem.delta ** (1.0 / 3.0))
    return lam + problem.t * math.atanh(math.sin(problem.phi0))


def eigenvalue_spacing(problem: ReducedProblem) -> float:
    """lambda change per unit change of the rescaled eigenvalue."""
    cos2 = math.cos(problem.phi0) ** 2
    return problem.effective_mu * cos2 * 2.0 * math.tan(problem.phi0) * problem.delta ** (1.0 / 3.0)


def reduced_problem_as_sl(problem: ReducedProblem) -> SLProblem:
    n = problem.n
    weight = partial(_w, n)
    return SLProblem(
        x_lo=0.0,
        x_hi=problem.phi0,
        p=partial(_p, n),
        w=weight,
        q0=partial(_q0, n, problem.effective_mu, problem.t),
        normalization_weight=weight,
        label=f"reduced(n={n}, phi0={problem.phi0:.10g}, mu={problem.mu:.6g}, t={problem.t:.6g}, j={problem.j})",
        eigenvalue_guess=partial(eigenvalue_guess, problem),
        eigenvalue_scale=0.25 * eigenvalue_spacing(problem),
    )


def solve_reduced(
    problem: ReducedProblem, K: int, solver: EigenSolver, tol: float = 1e-12, grid: np.ndarray | None = None
) -> list[Eigenpair]:
    return solver.solve_spectrum(reduced_problem_as_sl(problem), K, tol, grid)


def hellmann_feynman_derivative(problem: ReducedProblem, eigenpair: Eigenpair) -> float:
    """d(lambda_k)/dt: the integral of P h_k^2 cos^{-n} over the eigenpair grid."""
    phi = eigenpair.x
    integrand = np.arctanh(np.sin(phi)) * eigenpair.y**2 * np.cos(phi) ** (-problem.n)
    return simpson_integral(integrand, phi)


# rescaling


def frame_options(cfg: dict[str, Any] | None = None) -> dict[str, float]:
    """x_cap and step of the Airy-frame grid from the rescale section of ``cfg``."""
    rescale_cfg = (cfg or default_lab_config())["rescale"]
    return {"x_cap": float(rescale_cfg["x_cap"]), "step": float(rescale_cfg["grid_step"])}


def frame_grid(problem: ReducedProblem, x_cap: float | None = None, step: float | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Uniform x-grid on [0, min(x_max, x_cap)] and the matching ascending phi samples."""
    if x_cap is None or step is None:
        defaults = frame_options()
        x_cap = defaults["x_cap"] if x_cap is None else x_cap
        step = defaults["step"] if step is None else step
    s = problem.delta ** (1.0 / 3.0)
    x_max = problem.phi0 / s
    x = uniform_grid(0.0, min(x_max, x_cap), step)
    phi = np.clip(problem.phi0 - s * x, 0.0, problem.phi0)
    return x, phi[::-1].copy()


def frame_for(problem: ReducedProblem, x_cap: float | None = None, step: float | None = None) -> RescaledFrame:
    """Airy frame of ``problem`` carrying no eigenpairs; enough for the operator maps."""
    x, _ = frame_grid(problem, x_cap, step)
    return RescaledFrame(
        problem=problem,
        delta=problem.delta,
        x_max=problem.phi0 / problem.delta ** (1.0 / 3.0),
        x=x,
        n_k=(),
        alpha_tilde=(),
        eigenvalues=(),
        u_tilde=np.empty((0, x.size)),
    )


def rescale(problem: ReducedProblem, eigenpairs: list[Eigenpair], x_cap: float | None = None, step: float | None = None) -> RescaledFrame:
    """Map eigenpairs of the unperturbed problem into the Airy frame.

    Eigenpairs sampled on the phi points of ``frame_grid`` are used as they
    are; any other sampling is interpolated with a cubic spline.
    """
    if problem.t != 0:
        raise ContractError("rescaling is defined for the unperturbed problem (t = 0)", t=problem.t)
    if not eigenpairs:
        raise ShapeError("no eigenpairs to rescale")
    delta = problem.delta
    s = delta ** (1.0 / 3.0)
    x, phi = frame_grid(problem, x_cap, step)
    cos2 = math.cos(problem.phi0) ** 2
    cos_n = math.cos(problem.phi0) ** problem.n
    n_k = math.sqrt(s / cos_n)

    rows = []
    alphas = []
    for pair in eigenpairs:
        if pair.x.shape == phi.shape and np.allclose(pair.x, phi, rtol=0.0, atol=1e-14):
            h = pair.y
        else:
            h = CubicSpline(pair.x, pair.y)(phi)
        rows.append(n_k * h[::-1])
        alphas.append((pair.eigenvalue / problem.effective_mu - cos2) / cos2 / (2.0 * math.tan(problem.phi0) * s))
    logger.debug("rescaled %d eigenpairs: delta=%.6g x_max=%.6g", len(eigenpairs), delta, problem.phi0 / s)
    return RescaledFrame(
        problem=problem,
        delta=delta,
        x_max=problem.phi0 / s,
        x=x,
        n_k=tuple(n_k for _ in eigenpairs),
        alpha_tilde=tuple(alphas),
        eigenvalues=tuple(pair.eigenvalue for pair in eigenpairs),
        u_tilde=np.vstack(rows),
    )


def rescaled_spectrum(
    problem: ReducedProblem,
    K: int,
    solver: EigenSolver,
    tol: float = 1e-12,
    x_cap: float | None = None,
    step: float | None = None,
) -> RescaledFrame:
    """Solve for K eigenpairs directly on the frame's phi points and rescale."""
    _, phi = frame_grid(problem, x_cap, step)
    return rescale(problem, solve_reduced(problem, K, solver, tol, grid=phi), x_cap, step)


def frame_weight(frame: RescaledFrame) -> np.ndarray:
    """cos^n(phi0) / cos^n(phi): the weight in which each u_tilde is normalised."""
    n = frame.problem.n
    return (math.cos(frame.problem.phi0) / np.cos(frame.phi)) ** n


def alpha_to_eigenvalue(frame: RescaledFrame, alpha: float) -> float:
    p = frame.problem
    cos2 = math.cos(p.phi0) ** 2
    return p.effective_mu * cos2 * (1.0 + 2.0 * math.tan(p.phi0) * frame.cube_root_delta * alpha)


def coefficient_defect(frame: RescaledFrame, x: Any) -> Any:
    """E(x) - x, where E is the rescaled potential; of order delta^{1/3} x^2."""
    p = frame.problem
    s = frame.cube_root_delta
    xs = np.asarray(x, dtype=float)
    c = np.cos(p.phi0 - s * xs)
    e = (1.0 / s) / (2.0 * math.tan(p.phi0)) * (1.0 - math.cos(p.phi0) ** 2 / c**2)
    defect = e - xs
    return float(defect) if defect.ndim == 0 else defect


def _on_frame_grid(frame: RescaledFrame, f: SampledFunction | np.ndarray) -> np.ndarray:
    if isinstance(f, tuple):
        x, values = (np.asarray(a, dtype=float) for a in f)
        if x.shape != frame.x.shape or not np.allclose(x, frame.x, rtol=0.0, atol=1e-12):
            raise ShapeError("function is not sampled on the frame grid", points=int(x.size), frame_points=int(frame.x.size))
    else:
        values = np.asarray(f, dtype=float)
    if values.shape != frame.x.shape:
        raise ShapeError("samples do not match the frame grid", values=values.shape, frame=frame.x.shape)
    return values


def apply_rescaled_operator(frame: RescaledFrame, f: SampledFunction | np.ndarray) -> np.ndarray:
    """(c/cos phi0)^2 [-f'' + (n-2) delta^{1/3} tan(phi) f' + E(x) f] with c = cos(phi)."""
    values = _on_frame_grid(frame, f)
    p = frame.problem
    s = frame.cube_root_delta
    h = grid_step(frame.x)
    phi = frame.phi
    c = np.cos(phi)
    e = frame.x + coefficient_defect(frame, frame.x)
    inner = -second_derivative(values, h) + e * values
    if p.n != 2:
        inner = inner + (p.n - 2) * s * np.tan(phi) * first_derivative(values, h)
    return (c / math.cos(p.phi0)) ** 2 * inner


def apply_airy_operator(x: np.ndarray, f: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    f = np.asarray(f, dtype=float)
    if x.shape != f.shape:
        raise ShapeError("samples do not match the grid", values=f.shape, grid=x.shape)
    return -second_derivative(f, grid_step(x)) + x * f


def eigen_residual(frame: RescaledFrame, k: int) -> float:
    """L2 norm of (A_tilde - alpha_tilde_k) u_tilde_k on the frame grid."""
    u = frame.u_tilde[k - 1]
    r = apply_rescaled_operator(frame, u) - frame.alpha_tilde[k - 1] * u
    return math.sqrt(simpson_integral(r * r, frame.x))


def pde_cross_check(
    problem: ReducedProblem, solver: EigenSolver, K: int = 2, n_s: int = 31, n_phi: int = 400
) -> dict[str, Any]:
    """Reduced eigenvalues next to the 2-D finite-difference ones (n = 2)."""
    from app.gap_lab.solvers.matrix_oracle import pde_oracle_eigenvalues

    reduced = solver.eigenvalues(reduced_problem_as_sl(problem), K)
    pde = pde_oracle_eigenvalues(problem, n_s=n_s, n_phi=n_phi, K=K)
    relative = np.abs(pde - reduced) / np.abs(reduced)
    logger.info("pde cross-check mu=%.6g t=%.6g: max relative deviation %.3e", problem.mu, problem.t, float(np.max(relative)))
    return {"reduced": reduced, "pde": pde, "relative_deviation": relative}
