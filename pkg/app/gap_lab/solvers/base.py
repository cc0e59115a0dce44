from __future__ import annotations

from abc import ABC, abstractmethod

import numpy as np

from app.gap_lab.models.schemas import Eigenpair, SLProblem


class EigenSolver(ABC):
    name: str = "base"

    @abstractmethod
    def eigenvalue(self, problem: SLProblem, k: int, tol: float = 1e-12) -> float:
        raise NotImplementedError

    @abstractmethod
    def solve_eigenpair(
        self, problem: SLProblem, k: int, tol: float = 1e-12, grid: np.ndarray | None = None
    ) -> Eigenpair:
        raise NotImplementedError

    def eigenvalues(self, problem: SLProblem, K: int, tol: float = 1e-12) -> np.ndarray:
        return np.array([self.eigenvalue(problem, k, tol) for k in range(1, K + 1)])

    def solve_spectrum(
        self, problem: SLProblem, K: int, tol: float = 1e-12, grid: np.ndarray | None = None
    ) -> list[Eigenpair]:
        return [self.solve_eigenpair(problem, k, tol, grid) for k in range(1, K + 1)]
