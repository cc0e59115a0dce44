from __future__ import annotations

import math

import pytest

from app.gap_lab.core.config import load_lab_config
from app.gap_lab.models.schemas import SLProblem
from app.gap_lab.services import run_status
from app.gap_lab.solvers.shooting import ShootingSolver


def _one(x):
    return 1.0


@pytest.fixture(scope="session")
def lab_cfg():
    return load_lab_config()


@pytest.fixture(scope="session")
def shooting():
    return ShootingSolver()


@pytest.fixture
def constant_problem():
    """-y'' + mu y = lambda y on (0, pi); lambda_k = mu + k^2, y_k = sqrt(2/pi) sin(kx)."""

    def build(mu: float = 10.0) -> SLProblem:
        return SLProblem(
            x_lo=0.0,
            x_hi=math.pi,
            p=_one,
            w=_one,
            q0=lambda x: mu,
            normalization_weight=_one,
            label=f"constant(mu={mu:g})",
        )

    return build


@pytest.fixture(autouse=True)
def _idle_run_status():
    yield
    run_status.finish_run("test teardown")
