"""Finite-difference oracles for the shooting solver.

The 1-D oracle discretises -(p y')' + q0 y = lambda w y with second-order
central differences (p at half nodes) and folds the diagonal weight in as
W^{-1/2} A W^{-1/2}, so the matrix stays symmetric tridiagonal. The 2-D
oracle discretises -Delta + tP on the whole n = 2 domain in (log r, phi).
"""

from __future__ import annotations

import logging
import math

import numpy as np
from scipy import sparse
from scipy.linalg import eigh_tridiagonal
from scipy.sparse.linalg import eigsh

from app.gap_lab.core.errors import RangeError, require_range
from app.gap_lab.models.schemas import Eigenpair, MatrixOracle, ReducedProblem, SLProblem
from app.gap_lab.solvers.base import EigenSolver
from app.gap_lab.solvers.quadrature import simpson_integral
from app.gap_lab.solvers.shooting import sample

logger = logging.getLogger(__name__)

MIN_GRID = 64
FULL_SPECTRUM_LIMIT = 2048


def _bands(problem: SLProblem, N: int) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    h = problem.length / (N + 1)
    x = problem.x_lo + h * np.arange(1, N + 1)
    p_half = sample(problem.p, problem.x_lo + h * (np.arange(N + 1) + 0.5))
    w = sample(problem.w, x)
    diag = ((p_half[:-1] + p_half[1:]) / (h * h) + sample(problem.q0, x)) / w
    root_w = np.sqrt(w)
    off = -p_half[1:-1] / (h * h) / (root_w[:-1] * root_w[1:])
    return x, diag, off, root_w


def build_matrix_oracle(problem: SLProblem, N: int, count: int | None = None) -> MatrixOracle:
    """Symmetric oracle with N interior nodes; ``count`` limits the eigenvalues computed."""
    if N < MIN_GRID:
        raise RangeError(f"N={N} below the minimum grid size {MIN_GRID}", N=N)
    x, diag, off, _ = _bands(problem, N)
    if count is None and N > FULL_SPECTRUM_LIMIT:
        count = 32
    if count is None:
        eigenvalues = eigh_tridiagonal(diag, off, eigvals_only=True)
    else:
        require_range("count", count, 1, N)
        eigenvalues = eigh_tridiagonal(diag, off, eigvals_only=True, select="i", select_range=(0, count - 1))
    return MatrixOracle(grid_size=N, x=x, diagonal=diag, off_diagonal=off, eigenvalues=np.sort(eigenvalues))


def richardson_eigenvalues(problem: SLProblem, N: int, K: int) -> np.ndarray:
    """Lowest K oracle eigenvalues at step h and h/2 combined to cancel the h^2 term."""
    coarse = build_matrix_oracle(problem, N, count=K).eigenvalues
    fine = build_matrix_oracle(problem, 2 * N + 1, count=K).eigenvalues
    return (4.0 * fine - coarse) / 3.0


class MatrixOracleSolver(EigenSolver):
    """Eigenpairs straight from the oracle; second order, for cross-checks."""

    name = "matrix"

    def __init__(self, grid_size: int = 8192) -> None:
        if grid_size < MIN_GRID:
            raise RangeError(f"grid_size={grid_size} below {MIN_GRID}", grid_size=grid_size)
        self.grid_size = grid_size

    def eigenvalue(self, problem: SLProblem, k: int, tol: float = 1e-12) -> float:
        return float(build_matrix_oracle(problem, self.grid_size, count=k).eigenvalues[k - 1])

    def eigenvalues(self, problem: SLProblem, K: int, tol: float = 1e-12) -> np.ndarray:
        return build_matrix_oracle(problem, self.grid_size, count=K).eigenvalues

    def solve_eigenpair(
        self, problem: SLProblem, k: int, tol: float = 1e-12, grid: np.ndarray | None = None
    ) -> Eigenpair:
        require_range("k", k, 1, self.grid_size)
        nodes, diag, off, root_w = _bands(problem, self.grid_size)
        values, vectors = eigh_tridiagonal(diag, off, select="i", select_range=(k - 1, k - 1))
        x = np.concatenate([[problem.x_lo], nodes, [problem.x_hi]])
        y = np.concatenate([[0.0], vectors[:, 0] / root_w, [0.0]])
        y /= math.sqrt(simpson_integral(sample(problem.normalization_weight, x) * y * y, x))
        if y[1] < 0:
            y = -y
        if grid is not None:
            grid = np.asarray(grid, dtype=float)
            x_out, y_out = grid, np.interp(grid, x, y)
        else:
            x_out, y_out = x, y
        dy = np.gradient(y_out, x_out)
        norm_check = simpson_integral(sample(problem.normalization_weight, x_out) * y_out * y_out, x_out)
        return Eigenpair(k=k, eigenvalue=float(values[0]), x=x_out, y=y_out, dy=dy, norm_check=norm_check)


def pde_oracle_eigenvalues(problem: ReducedProblem, n_s: int = 31, n_phi: int = 400, K: int = 2) -> np.ndarray:
    """Lowest K Dirichlet eigenvalues of -Delta + tP on the n = 2 domain.

    In s = log r the hyperbolic Laplacian is cos^2(phi)(u_ss + u_phi_phi), so
    the problem is -(u_ss + u_phi_phi) + tP cos^-2 u = lambda cos^-2 u on
    (0, pi/sqrt(mu)) x (0, phi0), discretised with the 5-point stencil.
    """
    if problem.n != 2:
        raise RangeError("the PDE oracle covers n = 2 only", n=problem.n)
    if problem.j != 1:
        raise RangeError("the PDE oracle resolves the first radial mode only", j=problem.j)
    if n_s < 8 or n_phi < 16:
        raise RangeError("PDE oracle grid too coarse", n_s=n_s, n_phi=n_phi)
    from app.gap_lab.services.gap_model import eval_potential

    length_s = math.pi / math.sqrt(problem.mu)
    hs = length_s / (n_s + 1)
    hp = problem.phi0 / (n_phi + 1)
    phi = hp * np.arange(1, n_phi + 1)

    def second_difference(m: int, h: float) -> sparse.csr_matrix:
        return sparse.diags([-np.ones(m - 1), 2.0 * np.ones(m), -np.ones(m - 1)], [-1, 0, 1]) / (h * h)

    laplace = sparse.kron(sparse.identity(n_phi), second_difference(n_s, hs)) + sparse.kron(
        second_difference(n_phi, hp), sparse.identity(n_s)
    )
    sec2 = np.repeat(1.0 / np.cos(phi) ** 2, n_s)
    potential = problem.t * np.repeat(eval_potential(phi), n_s) * sec2
    # symmetric form: W^{-1/2} (L + V) W^{-1/2} with W = diag(sec^2)
    scale = sparse.diags(1.0 / np.sqrt(sec2))
    operator = (scale @ (laplace + sparse.diags(potential)) @ scale).tocsc()
    values = eigsh(operator, k=K, sigma=0.0, which="LM", return_eigenvectors=False)
    logger.debug("pde oracle %dx%d: %s", n_s, n_phi, values)
    return np.sort(values)
