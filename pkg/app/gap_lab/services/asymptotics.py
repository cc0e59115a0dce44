"""Empirical checks of the asymptotic machinery.

* the abstract eigenvalue/eigenvector perturbation bounds on random
  finite-dimensional instances,
* finite-interval Airy problems against the half-line ones,
* rate fits for the rescaled spectra and the gap-derivative integral.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from typing import Any, Iterable

import numpy as np
from scipy.linalg import eigh, eigvalsh, sqrtm

from app.gap_lab.core.config import default_lab_config
from app.gap_lab.core.errors import ContractError, DegeneracyError, DomainError, RangeError, ShapeError, require_range
from app.gap_lab.models.schemas import (
    CorollaryCheck,
    FiniteAiryResult,
    NormPair,
    PerturbationReport,
    RateFit,
    ReducedProblem,
    SLProblem,
)
from app.gap_lab.services import run_status
from app.gap_lab.services.airy import airy_ai, airy_zeros, eval_airy
from app.gap_lab.services.factories import build_solver
from app.gap_lab.services.gap_model import eval_potential_derivative, frame_weight, rescaled_spectrum, solve_reduced
from app.gap_lab.solvers.base import EigenSolver
from app.gap_lab.solvers.quadrature import simpson_integral
from app.gap_lab.utils.math_utils import uniform_grid

logger = logging.getLogger(__name__)

DEGENERATE_GAP = 1e-10
EIGENVECTOR_GAP = 1e-6
SAFETY_FACTOR = 2.0
FINITE_AIRY_STEP = 1.0 / 256.0
DECAY_WINDOW = (2.0, 12.0)


# perturbation bounds


def harness_constant(c0: float) -> float:
    """Explicit C(c0) for the perturbation bounds.

    The upper eigenvalue bound costs c0^2 (norm change of E u), the lower one
    c0, and the eigenvector bound a further factor 2 c0 from splitting off
    the u_k component; 4 c0^3 covers all three, doubled for safety.
    """
    return SAFETY_FACTOR * 4.0 * c0**3


def make_norm_pair(gram_base: np.ndarray, gram_tilde: np.ndarray) -> NormPair:
    gram_base = np.asarray(gram_base, dtype=float)
    gram_tilde = np.asarray(gram_tilde, dtype=float)
    if gram_base.ndim != 2 or gram_base.shape != gram_tilde.shape or gram_base.shape[0] != gram_base.shape[1]:
        raise ShapeError("gram matrices must be square and of equal size", base=gram_base.shape, tilde=gram_tilde.shape)
    ratios = eigvalsh(gram_tilde, gram_base)
    if ratios[0] <= 0:
        raise DomainError("gram_tilde is not positive definite relative to gram_base", smallest=float(ratios[0]))
    c0 = max(1.0, math.sqrt(ratios[-1]), 1.0 / math.sqrt(ratios[0]))
    return NormPair(dim=gram_base.shape[0], gram_base=gram_base, gram_tilde=gram_tilde, c0=c0)


def norm_ratio_range(norms: NormPair, vectors: np.ndarray) -> tuple[float, float]:
    """Min and max of |v|_tilde / |v|_base over the columns of ``vectors``."""
    v = np.asarray(vectors, dtype=float)
    base = np.sqrt(np.einsum("ij,ik,kj->j", v, norms.gram_base, v))
    tilde = np.sqrt(np.einsum("ij,ik,kj->j", v, norms.gram_tilde, v))
    ratio = tilde / base
    return float(ratio.min()), float(ratio.max())


def _random_symmetric(rng: np.random.Generator, dim: int) -> np.ndarray:
    m = rng.uniform(-1.0, 1.0, size=(dim, dim))
    r = 0.5 * (m + m.T)
    return r / np.linalg.norm(r, 2)


def _random_gram(rng: np.random.Generator, dim: int, spread: float) -> np.ndarray:
    # spectrum inside [1 - spread, 1 + spread]
    return np.eye(dim) + spread * _random_symmetric(rng, dim)


def random_instance(
    rng: np.random.Generator, dim: int, scale: float = 1e-2, spread: float = 0.05
) -> tuple[NormPair, np.ndarray, np.ndarray]:
    """Random (norms, A, A_tilde) with A self-adjoint for gram_base and A_tilde for gram_tilde.

    A has eigenvalues alpha_1 in [1, 2] and consecutive gaps in [0.5, 1.5];
    A_tilde = G_tilde^{-1}(S + scale R) where S = G A and |R| = 1.
    """
    require_range("dim", dim, 1, 10_000)
    gram = _random_gram(rng, dim, spread)
    gram_tilde = _random_gram(rng, dim, spread)
    alphas = rng.uniform(1.0, 2.0) + np.concatenate([[0.0], np.cumsum(rng.uniform(0.5, 1.5, size=dim - 1))])
    q, _ = np.linalg.qr(rng.standard_normal((dim, dim)))
    u = np.linalg.solve(np.real(sqrtm(gram)), q)
    u_inv = u.T @ gram
    s = u_inv.T @ np.diag(alphas) @ u_inv
    s = 0.5 * (s + s.T)
    a = np.linalg.solve(gram, s)
    a_tilde = np.linalg.solve(gram_tilde, s + scale * _random_symmetric(rng, dim))
    return make_norm_pair(gram, gram_tilde), a, a_tilde


def _self_adjoint_eig(operator: np.ndarray, gram: np.ndarray, label: str) -> tuple[np.ndarray, np.ndarray]:
    s = gram @ operator
    asym = float(np.max(np.abs(s - s.T)))
    if asym > 1e-8 * max(1.0, float(np.max(np.abs(s)))):
        raise ContractError(f"{label} is not self-adjoint for its inner product", asymmetry=asym)
    return eigh(0.5 * (s + s.T), gram)


def _distortion(gram_span: np.ndarray) -> float:
    m = eigvalsh(gram_span)
    return max(float(m[-1]) - 1.0, 1.0 / float(m[0]) - 1.0, 0.0)


def check_perturbation_lemma(norms: NormPair, A: np.ndarray, A_tilde: np.ndarray, k: int) -> PerturbationReport:
    """Evaluate both eigenvalue bounds and the eigenvector bound at index k."""
    require_range("k", k, 1, norms.dim)
    g, gt = norms.gram_base, norms.gram_tilde
    alpha, u = _self_adjoint_eig(np.asarray(A, dtype=float), g, "A")
    alpha_t, u_t = _self_adjoint_eig(np.asarray(A_tilde, dtype=float), gt, "A_tilde")
    e = np.asarray(A_tilde, dtype=float) - np.asarray(A, dtype=float)

    def h_norm(v: np.ndarray) -> np.ndarray:
        return np.sqrt(np.einsum("ij,ik,kj->j", v, g, v))

    s1 = float(np.sum(h_norm(e @ u[:, :k]) ** 2))
    s2 = float(np.sum(h_norm(e @ u_t[:, :k]) ** 2))
    eps = _distortion(u[:, :k].T @ gt @ u[:, :k])
    eps_t = _distortion(u_t[:, :k].T @ g @ u_t[:, :k])
    c = harness_constant(norms.c0)

    a_k, at_k = float(alpha[k - 1]), float(alpha_t[k - 1])
    diff = at_k - a_k
    roundoff = 64.0 * np.finfo(float).eps * (abs(a_k) + abs(at_k) + 1.0)
    upper = eps * a_k + c * math.sqrt(s1)
    lower = -c * math.sqrt(s2) - eps_t * at_k
    upper_ok = diff <= upper + roundoff
    lower_ok = lower - roundoff <= diff
    margin = min(upper - diff, diff - lower)

    gaps = []
    if k < norms.dim:
        gaps.append(float(alpha[k] - alpha[k - 1]))
    if k > 1:
        gaps.append(float(alpha[k - 1] - alpha[k - 2]))
    gamma = min(gaps) if gaps else math.inf

    report_fields: dict[str, Any] = dict(
        k=k,
        lower_bound_ok=bool(lower_ok),
        upper_bound_ok=bool(upper_ok),
        gamma_k=gamma,
        alpha_k=a_k,
        alpha_tilde_k=at_k,
        eps_k=eps,
        eps_tilde_k=eps_t,
        harness_constant=c,
    )
    if gamma < DEGENERATE_GAP:
        report = PerturbationReport(eigenvector_bound_ok=None, margin=margin, **report_fields)
        raise DegeneracyError(f"alpha_{k} is degenerate (gap {gamma:.3e})", report=report, k=k, gamma_k=gamma)

    uk = u[:, k - 1]
    ut_k = u_t[:, k - 1]
    if float(ut_k @ g @ uk) < 0:
        uk = -uk
    distance = float(h_norm((ut_k - uk)[:, None])[0])
    bound = c / gamma * (eps * a_k + math.sqrt(s1) + eps_t * at_k + math.sqrt(s2))
    vector_ok = distance <= bound + roundoff
    return PerturbationReport(
        eigenvector_bound_ok=bool(vector_ok),
        margin=min(margin, bound - distance),
        eigenvector_distance=distance,
        eigenvector_bound=bound,
        **report_fields,
    )


def _battery_instance(args: tuple[np.random.SeedSequence, int, float, float]) -> dict[str, Any]:
    seed_seq, max_dim, scale, spread = args
    rng = np.random.default_rng(seed_seq)
    dim = int(rng.integers(3, max_dim + 1))
    k = int(rng.integers(1, dim + 1))
    norms, a, a_tilde = random_instance(rng, dim, scale=scale, spread=spread)
    try:
        report = check_perturbation_lemma(norms, a, a_tilde, k)
    except DegeneracyError as exc:
        report = exc.report
    vector_checked = report.eigenvector_bound_ok is not None and report.gamma_k > EIGENVECTOR_GAP
    ok = report.lower_bound_ok and report.upper_bound_ok and (report.eigenvector_bound_ok or not vector_checked)
    return {"dim": dim, "c0": norms.c0, "eigenvector_checked": vector_checked, "passed": bool(ok), **report.to_dict()}


def run_perturbation_battery(
    instances: int = 500,
    seed: int = 20240527,
    max_dim: int = 12,
    scale: float = 1e-2,
    spread: float = 0.05,
    jobs: int = 1,
) -> dict[str, Any]:
    require_range("instances", instances, 1, math.inf)
    require_range("max_dim", max_dim, 3, 10_000)
    require_range("scale", scale, 0.0, 1e-2, closed=True)
    children = np.random.SeedSequence(seed).spawn(instances)
    tasks = [(child, max_dim, scale, spread) for child in children]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(_battery_instance, tasks, chunksize=max(1, instances // (4 * jobs))))
    else:
        rows = [_battery_instance(task) for task in tasks]
    failed = [row for row in rows if not row["passed"]]
    if failed:
        logger.warning("perturbation battery: %d of %d instances failed", len(failed), instances)
    else:
        logger.info("perturbation battery: %d instances passed (seed=%d)", instances, seed)
    return {
        "instances": instances,
        "seed": seed,
        "passed": instances - len(failed),
        "failed": len(failed),
        "eigenvector_checked": sum(1 for row in rows if row["eigenvector_checked"]),
        "min_margin": min(row["margin"] for row in rows),
        "rows": rows,
    }


# finite Airy problems


def _unit(x: Any) -> float:
    return 1.0


def _identity(x: Any) -> Any:
    return x


def _airy_zero_guess(k: int) -> float:
    return airy_zeros(k).a[-1]


def finite_airy(R: float, K: int, solver: EigenSolver | None = None, tol: float = 1e-12) -> FiniteAiryResult:
    """Dirichlet eigenpairs of -u'' + x u on (0, R)."""
    require_range("R", R, 6.0, math.inf)
    require_range("K", K, 1, 50)
    solver = solver or build_solver()
    problem = SLProblem(
        x_lo=0.0,
        x_hi=float(R),
        p=_unit,
        w=_unit,
        q0=_identity,
        normalization_weight=_unit,
        label=f"airy(0, {R:g})",
        eigenvalue_guess=_airy_zero_guess,
        eigenvalue_scale=0.1,
    )
    x = uniform_grid(0.0, float(R), FINITE_AIRY_STEP)
    pairs = solver.solve_spectrum(problem, K, tol, grid=x)
    alpha = tuple(pair.eigenvalue for pair in pairs)
    if any(b <= a for a, b in zip(alpha, alpha[1:])):
        raise DegeneracyError("finite Airy eigenvalues are not strictly increasing", alpha=alpha)
    a = airy_zeros(K).a
    return FiniteAiryResult(
        R=float(R),
        alpha_R=alpha,
        x=x,
        u_R=np.vstack([pair.y for pair in pairs]),
        deviation=tuple(abs(al - ak) for al, ak in zip(alpha, a)),
    )


# rate fits


def fit_rate(xs: Iterable[float], ys: Iterable[float]) -> RateFit:
    """Least-squares line through (log x, log y)."""
    x = np.asarray(list(xs), dtype=float)
    y = np.asarray(list(ys), dtype=float)
    if x.size != y.size:
        raise ShapeError("xs and ys differ in length", xs=int(x.size), ys=int(y.size))
    if x.size < 3:
        raise DomainError("need at least 3 points for a rate fit", points=int(x.size))
    if np.any(y <= 0) or np.any(x <= 0):
        raise DomainError("rate fits need positive data", min_x=float(x.min()), min_y=float(y.min()))
    lx, ly = np.log(x), np.log(y)
    slope, intercept = np.polyfit(lx, ly, 1)
    fitted = slope * lx + intercept
    total = float(np.sum((ly - ly.mean()) ** 2))
    r2 = 1.0 - float(np.sum((ly - fitted) ** 2)) / total if total > 0 else 1.0
    return RateFit(slope=float(slope), intercept=float(intercept), r2=r2)


def _fit_or_none(xs: list[float], ys: list[float]) -> dict[str, float] | None:
    if len(xs) < 3 or any(y <= 0 for y in ys):
        return None
    return fit_rate(xs, ys)._asdict()


# corollary integral


def check_corollary_integral(
    problem: ReducedProblem, solver: EigenSolver | None = None, tol: float = 1e-12, phi_points: int | None = None
) -> CorollaryCheck:
    """delta^{-1/3} I / P'(phi0) against its limit -(2/3)(a_2 - a_1)."""
    if problem.t != 0:
        raise ContractError("the corollary integral is taken at t = 0", t=problem.t)
    solver = solver or build_solver()
    phi_points = phi_points or int(default_lab_config()["rescale"]["phi_grid_points"])
    phi = np.linspace(0.0, problem.phi0, phi_points + 1)
    h1, h2 = solve_reduced(problem, 2, solver, tol, grid=phi)
    integral = gap_integral(problem, h1.x, h1.y, h2.y)
    scaled = problem.delta ** (-1.0 / 3.0) * integral / eval_potential_derivative(problem.phi0)
    a1, a2 = airy_zeros(2).a
    target = -(2.0 / 3.0) * (a2 - a1)
    logger.debug("corollary mu=%.6g: I=%.12g scaled=%.12g target=%.12g", problem.mu, integral, scaled, target)
    return CorollaryCheck(scaled_integral=scaled, target=target, deviation=scaled - target)


def gap_integral(problem: ReducedProblem, phi: np.ndarray, h1: np.ndarray, h2: np.ndarray) -> float:
    """I = integral of P (h_2^2 - h_1^2) cos^{-n} over (0, phi0)."""
    integrand = np.arctanh(np.sin(phi)) * (h2**2 - h1**2) * np.cos(phi) ** (-problem.n)
    return simpson_integral(integrand, phi)


# sweeps


def _half_line_on(x: np.ndarray, k: int) -> np.ndarray:
    a_k = airy_zeros(k).a[-1]
    return airy_ai(x - a_k) / abs(eval_airy(-a_k).ai_prime)


def _rescale_row(args: tuple[float, float, int, int, EigenSolver, dict[str, float]]) -> dict[str, Any]:
    phi0, mu, n, K, solver, frame_opts = args
    problem = ReducedProblem(n=n, phi0=phi0, mu=mu)
    frame = rescaled_spectrum(problem, K, solver, **frame_opts)
    s = frame.cube_root_delta
    weight = frame_weight(frame)
    a = airy_zeros(K).a
    tan0 = math.tan(phi0)
    cos2 = math.cos(phi0) ** 2
    row: dict[str, Any] = {"mu": mu, "delta": frame.delta, "x_max": frame.x_max, "x_end": float(frame.x[-1])}
    for k in range(1, K + 1):
        u = frame.u_tilde[k - 1]
        v = _half_line_on(frame.x, k)
        lam = frame.eigenvalues[k - 1]
        lo, hi = a[k - 1] + DECAY_WINDOW[0], a[k - 1] + DECAY_WINDOW[1]
        window = (frame.x >= lo) & (frame.x <= hi)
        row[f"lambda_{k}"] = lam
        row[f"alpha_tilde_{k}"] = frame.alpha_tilde[k - 1]
        row[f"a_{k}"] = a[k - 1]
        row[f"deviation_{k}"] = abs(frame.alpha_tilde[k - 1] - a[k - 1])
        row[f"expansion_residual_{k}"] = abs(lam / (mu * cos2) - 1.0 - 2.0 * tan0 * a[k - 1] * s)
        row[f"proximity_{k}"] = simpson_integral(frame.x * np.abs(u**2 - v**2), frame.x)
        row[f"norm_{k}"] = simpson_integral(weight * u**2, frame.x)
        row[f"decay_{k}"] = float(np.max(np.abs(u[window]) * np.exp(frame.x[window]))) if window.any() else None
    return row


def _ordered_map(worker: Any, tasks: list[Any], jobs: int, command: str) -> list[Any]:
    run_status.start_run(command, len(tasks))
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=min(jobs, len(tasks))) as pool:
            results = pool.map(worker, tasks)
            rows = []
            for i, (task, row) in enumerate(zip(tasks, results), start=1):
                rows.append(row)
                run_status.update_run("solving", i, item=f"mu={task[1]:g}")
    else:
        rows = []
        for i, task in enumerate(tasks, start=1):
            rows.append(worker(task))
            run_status.update_run("solving", i, item=f"mu={task[1]:g}")
    run_status.finish_run(f"{command}: {len(rows)} rows")
    return rows


def rescale_sweep(
    phi0: float,
    mus: Iterable[float],
    n: int = 2,
    K: int = 2,
    solver: EigenSolver | None = None,
    jobs: int = 1,
    x_cap: float | None = None,
    step: float | None = None,
) -> dict[str, Any]:
    """Rescaled spectra over a mu-sweep, with delta-rate fits per k."""
    require_range("K", K, 1, 50)
    solver = solver or build_solver()
    mus = [float(mu) for mu in mus]
    frame_opts = {"x_cap": x_cap, "step": step}
    rows = _ordered_map(_rescale_row, [(phi0, mu, n, K, solver, frame_opts) for mu in mus], jobs, "rescale-sweep")
    deltas = [row["delta"] for row in rows]
    fits: dict[str, Any] = {}
    for k in range(1, K + 1):
        for key in ("deviation", "expansion_residual", "proximity"):
            fits[f"{key}_{k}"] = _fit_or_none(deltas, [row[f"{key}_{k}"] for row in rows])
    return {"rows": rows, "fits": fits}


def _corollary_row(args: tuple[float, float, int, int, EigenSolver, int | None]) -> dict[str, Any]:
    phi0, mu, n, _, solver, phi_points = args
    problem = ReducedProblem(n=n, phi0=phi0, mu=mu)
    check = check_corollary_integral(problem, solver, phi_points=phi_points)
    integral = check.scaled_integral * problem.delta ** (1.0 / 3.0) * eval_potential_derivative(phi0)
    return {
        "mu": mu,
        "delta": problem.delta,
        "integral_I": integral,
        "target": check.target,
        "deviation": check.deviation,
        "scaled_integral": check.scaled_integral,
    }


def corollary_sweep(
    phi0: float,
    mus: Iterable[float],
    n: int = 2,
    solver: EigenSolver | None = None,
    jobs: int = 1,
    phi_points: int | None = None,
) -> dict[str, Any]:
    solver = solver or build_solver()
    mus = [float(mu) for mu in mus]
    if not mus:
        raise RangeError("mu sweep is empty")
    rows = _ordered_map(_corollary_row, [(phi0, mu, n, 2, solver, phi_points) for mu in mus], jobs, "corollary-sweep")
    fit = _fit_or_none([row["delta"] for row in rows], [abs(row["deviation"]) for row in rows])
    return {"rows": rows, "fits": {"deviation": fit}}
