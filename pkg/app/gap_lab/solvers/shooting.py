"""Prüfer-angle shooting for regular Dirichlet Sturm–Liouville problems.

With y = rho sin(theta) and p y' = rho cos(theta) the angle obeys

    theta' = cos^2(theta) / p + (lambda w - q0) sin^2(theta)

and is integrated from both ends towards a matching point c inside the
oscillatory region. The mismatch theta_L(c) - theta_R(c) increases strictly
with lambda and equals k*pi exactly at lambda_k, which indexes eigenvalues by
node count. Amplitudes are carried as log(rho) and the normalisation
integral is integrated relative to the current amplitude, so nothing
overflows however deep the evanescent region is.
"""

from __future__ import annotations

import logging
import math
from typing import Any, Callable

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import brentq

from app.gap_lab.core.errors import IntegrationError, RangeError, SearchRangeError, require_range
from app.gap_lab.models.schemas import Eigenpair, SLProblem
from app.gap_lab.solvers.base import EigenSolver
from app.gap_lab.solvers.quadrature import simpson_integral
from app.gap_lab.utils.math_utils import count_sign_changes

logger = logging.getLogger(__name__)

TOL_MIN, TOL_MAX = 1e-13, 1e-4
SAMPLE_POINTS = 513
DEFAULT_GRID_POINTS = 4096
_EPS4 = 4.0 * np.finfo(float).eps


def sample(f: Callable[[Any], Any], x: np.ndarray) -> np.ndarray:
    """Evaluate a coefficient on an array, broadcasting constant callables."""
    return np.asarray(f(x), dtype=float) * np.ones_like(x)


class ShootingSolver(EigenSolver):
    name = "shooting"

    def __init__(
        self,
        method: str = "DOP853",
        rtol: float = 1e-12,
        atol: float = 1e-12,
        grid_points: int = DEFAULT_GRID_POINTS,
        max_bracket_expansions: int = 60,
    ) -> None:
        self.method = method
        self.rtol = rtol
        self.atol = atol
        self.grid_points = grid_points
        self.max_bracket_expansions = max_bracket_expansions

    # integration

    def _integrate(
        self, problem: SLProblem, lam: float, x_from: float, x_to: float, *, full: bool
    ) -> Any:
        p, w, q0, nw = problem.p, problem.w, problem.q0, problem.normalization_weight
        direction = 1.0 if x_to > x_from else -1.0

        if full:

            def rhs(x: float, state: np.ndarray) -> list[float]:
                theta, _, mass = state
                sn, cs = math.sin(theta), math.cos(theta)
                p_inv = 1.0 / float(p(x))
                q = lam * float(w(x)) - float(q0(x))
                dlog = sn * cs * (p_inv - q)
                return [cs * cs * p_inv + q * sn * sn, dlog, direction * float(nw(x)) * sn * sn - 2.0 * dlog * mass]

            y0 = [0.0, 0.0, 0.0]
        else:

            def rhs(x: float, state: np.ndarray) -> list[float]:
                sn, cs = math.sin(state[0]), math.cos(state[0])
                return [cs * cs / float(p(x)) + (lam * float(w(x)) - float(q0(x))) * sn * sn]

            y0 = [0.0]

        sol = solve_ivp(
            rhs, (x_from, x_to), y0, method=self.method, rtol=self.rtol, atol=self.atol, dense_output=full
        )
        if not sol.success:
            logger.warning("integration failed on %s at lambda=%.15g: %s", problem.label or "problem", lam, sol.message)
            raise IntegrationError(
                f"integrator did not converge: {sol.message}",
                lam=lam,
                x_from=x_from,
                x_to=x_to,
                nfev=int(sol.nfev),
                method=self.method,
            )
        return sol

    def mismatch(self, problem: SLProblem, lam: float, c: float) -> float:
        left = self._integrate(problem, lam, problem.x_lo, c, full=False)
        right = self._integrate(problem, lam, problem.x_hi, c, full=False)
        return float(left.y[0, -1] - right.y[0, -1])

    # bracketing

    def _coefficient_samples(self, problem: SLProblem) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        nodes = np.linspace(problem.x_lo, problem.x_hi, SAMPLE_POINTS)[1:-1]
        p = sample(problem.p, nodes)
        w = sample(problem.w, nodes)
        q0 = sample(problem.q0, nodes)
        if np.any(p <= 0) or np.any(w <= 0) or not np.all(np.isfinite(q0)):
            raise RangeError("coefficients must satisfy p > 0, w > 0 and finite q0", label=problem.label)
        return nodes, p, w, q0

    def matching_point(self, problem: SLProblem, lam: float) -> float:
        nodes, _, w, q0 = self._coefficient_samples(problem)
        q = lam * w - q0
        allowed = np.flatnonzero(q > 0)
        if allowed.size == 0:
            return float(nodes[np.argmax(q / w)])
        return 0.5 * float(nodes[allowed[0]] + nodes[allowed[-1]])

    def _initial_guess(self, problem: SLProblem, k: int, lower: float | None) -> tuple[float, float]:
        if problem.eigenvalue_guess is not None:
            guess = float(problem.eigenvalue_guess(k))
            scale = float(problem.eigenvalue_scale or max(1.0, 1e-3 * abs(guess)))
        else:
            _, p, w, q0 = self._coefficient_samples(problem)
            floor = float(np.min(q0 / w))
            guess = floor + float(np.median(p / w)) * (k * math.pi / problem.length) ** 2
            scale = max(1.0, 0.5 * abs(guess - floor))
        if lower is not None and guess <= lower:
            guess = lower + scale
        return guess, scale

    def _bracket(
        self, problem: SLProblem, k: int, c: float, guess: float, scale: float, lower: float | None
    ) -> tuple[float, float]:
        target = k * math.pi
        width = scale
        lo = guess - width if lower is None else max(lower, guess - width)
        hi = guess + width
        theta_lo = self.mismatch(problem, lo, c)
        theta_hi: float | None = None
        expansions = 0

        def exhausted() -> SearchRangeError:
            return SearchRangeError(
                f"no bracket for k={k} after {expansions} expansions",
                k=k,
                lam_lo=lo,
                lam_hi=hi,
                nodes_lo=math.floor(theta_lo / math.pi),
                nodes_hi=None if theta_hi is None else math.floor(theta_hi / math.pi),
            )

        while theta_lo >= target:
            expansions += 1
            if expansions > self.max_bracket_expansions:
                raise exhausted()
            hi, theta_hi = lo, theta_lo
            width *= 2.0
            lo -= width
            theta_lo = self.mismatch(problem, lo, c)
            logger.debug("k=%d widened downwards to %.12g (theta/pi=%.3f)", k, lo, theta_lo / math.pi)

        if theta_hi is None:
            theta_hi = self.mismatch(problem, hi, c)
        while theta_hi <= target:
            expansions += 1
            if expansions > self.max_bracket_expansions:
                raise exhausted()
            lo, theta_lo = hi, theta_hi
            width *= 2.0
            hi += width
            theta_hi = self.mismatch(problem, hi, c)
            logger.debug("k=%d widened upwards to %.12g (theta/pi=%.3f)", k, hi, theta_hi / math.pi)
        return lo, hi

    def _locate(self, problem: SLProblem, k: int, tol: float, lower: float | None = None) -> tuple[float, float]:
        require_range("k", k, 1, math.inf)
        require_range("tol", tol, TOL_MIN, TOL_MAX)
        guess, scale = self._initial_guess(problem, k, lower)
        c = self.matching_point(problem, guess)
        lo, hi = self._bracket(problem, k, c, guess, scale, lower)
        target = k * math.pi
        lam = brentq(
            lambda value: self.mismatch(problem, value, c) - target,
            lo,
            hi,
            xtol=tol,
            rtol=max(tol, _EPS4),
            maxiter=200,
        )
        logger.debug("%s k=%d lambda=%.15g bracket=[%.12g, %.12g] c=%.6g", problem.label, k, lam, lo, hi, c)
        return float(lam), c

    def eigenvalue(self, problem: SLProblem, k: int, tol: float = 1e-12) -> float:
        return self._locate(problem, k, tol)[0]

    def eigenvalues(self, problem: SLProblem, K: int, tol: float = 1e-12) -> np.ndarray:
        values: list[float] = []
        for k in range(1, K + 1):
            values.append(self._locate(problem, k, tol, lower=values[-1] if values else None)[0])
        return np.array(values)

    # eigenfunctions

    def _grid(self, problem: SLProblem, grid: np.ndarray | None) -> np.ndarray:
        if grid is None:
            return np.linspace(problem.x_lo, problem.x_hi, self.grid_points)
        grid = np.asarray(grid, dtype=float)
        span = 1e-12 * max(1.0, abs(problem.x_lo), abs(problem.x_hi))
        if grid.ndim != 1 or grid.size < 3 or np.any(np.diff(grid) <= 0):
            raise RangeError("sample grid must be one-dimensional and strictly increasing", points=int(grid.size))
        if grid[0] < problem.x_lo - span or grid[-1] > problem.x_hi + span:
            raise RangeError("sample grid leaves the problem interval", lo=float(grid[0]), hi=float(grid[-1]))
        return np.clip(grid, problem.x_lo, problem.x_hi)

    def eigenpair_at(self, problem: SLProblem, k: int, lam: float, c: float, grid: np.ndarray | None = None) -> Eigenpair:
        x = self._grid(problem, grid)
        left_x = x[x <= c]
        right_x = x[x > c]
        left = self._integrate(problem, lam, problem.x_lo, c, full=True)
        right = self._integrate(problem, lam, problem.x_hi, c, full=True)
        theta_lc, log_lc, mass_lc = left.y[:, -1]
        theta_rc, log_rc, mass_rc = right.y[:, -1]
        scale = 1.0 / math.sqrt(mass_lc + mass_rc)
        parity = 1.0 if math.cos(theta_lc - theta_rc) > 0 else -1.0

        pieces_y: list[np.ndarray] = []
        pieces_dy: list[np.ndarray] = []
        for sol, xs, log_c, sign in ((left, left_x, log_lc, 1.0), (right, right_x, log_rc, parity)):
            if xs.size == 0:
                continue
            theta, log_rho, _ = sol.sol(xs)
            amplitude = sign * scale * np.exp(log_rho - log_c)
            pieces_y.append(amplitude * np.sin(theta))
            pieces_dy.append(amplitude * np.cos(theta) / sample(problem.p, xs))
        y = np.concatenate(pieces_y)
        dy = np.concatenate(pieces_dy)

        norm_check = simpson_integral(sample(problem.normalization_weight, x) * y * y, x)
        nodes = count_sign_changes(y)
        if nodes != k - 1:
            logger.warning("%s k=%d: %d interior sign changes on the sample grid", problem.label, k, nodes)
        return Eigenpair(k=k, eigenvalue=lam, x=x, y=y, dy=dy, norm_check=norm_check)

    def solve_eigenpair(
        self, problem: SLProblem, k: int, tol: float = 1e-12, grid: np.ndarray | None = None
    ) -> Eigenpair:
        lam, c = self._locate(problem, k, tol)
        return self.eigenpair_at(problem, k, lam, c, grid)

    def solve_spectrum(
        self, problem: SLProblem, K: int, tol: float = 1e-12, grid: np.ndarray | None = None
    ) -> list[Eigenpair]:
        require_range("K", K, 1, math.inf)
        pairs: list[Eigenpair] = []
        for k in range(1, K + 1):
            lam, c = self._locate(problem, k, tol, lower=pairs[-1].eigenvalue if pairs else None)
            pairs.append(self.eigenpair_at(problem, k, lam, c, grid))
        return pairs


_default = ShootingSolver()


def solve_eigenpair(problem: SLProblem, k: int, tol: float = 1e-12, grid: np.ndarray | None = None) -> Eigenpair:
    return _default.solve_eigenpair(problem, k, tol, grid)


def solve_spectrum(problem: SLProblem, K: int, tol: float = 1e-12, grid: np.ndarray | None = None) -> list[Eigenpair]:
    return _default.solve_spectrum(problem, K, tol, grid)


def eigenvalue(problem: SLProblem, k: int, tol: float = 1e-12) -> float:
    return _default.eigenvalue(problem, k, tol)
