from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable, Literal, NamedTuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from app.gap_lab.core.reporting import jsonable


class FrozenModel(BaseModel):
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    def to_dict(self) -> dict[str, Any]:
        return {name: jsonable(getattr(self, name)) for name in type(self).model_fields}


# airy


class AiryValue(FrozenModel):
    x: float
    ai: float
    ai_prime: float
    bi: float
    bi_prime: float

    @property
    def wronskian(self) -> float:
        return self.ai * self.bi_prime - self.ai_prime * self.bi


class AiryZeros(FrozenModel):
    a: tuple[float, ...]

    def __len__(self) -> int:
        return len(self.a)


class HalfLineEigenfunction(FrozenModel):
    k: int = Field(ge=1)
    eigenvalue: float
    x: np.ndarray
    values: np.ndarray
    norm_constant: float


# sturm solver


@dataclass(frozen=True)
class SLProblem:
    """Dirichlet problem -(p y')' + q0 y = lambda w y on (x_lo, x_hi).

    ``eigenvalue_guess`` and ``eigenvalue_scale`` seed the bracket search when
    the caller knows roughly where lambda_k sits.
    """

    x_lo: float
    x_hi: float
    p: Callable[[Any], Any]
    w: Callable[[Any], Any]
    q0: Callable[[Any], Any]
    normalization_weight: Callable[[Any], Any]
    label: str = ""
    eigenvalue_guess: Callable[[int], float] | None = None
    eigenvalue_scale: float | None = None

    def __post_init__(self) -> None:
        if not (math.isfinite(self.x_lo) and math.isfinite(self.x_hi)) or self.x_lo >= self.x_hi:
            raise ValueError(f"interval must satisfy x_lo < x_hi, got ({self.x_lo}, {self.x_hi})")

    @property
    def length(self) -> float:
        return self.x_hi - self.x_lo


class Eigenpair(FrozenModel):
    k: int = Field(ge=1)
    eigenvalue: float
    x: np.ndarray
    y: np.ndarray
    dy: np.ndarray
    norm_check: float


class MatrixOracle(FrozenModel):
    grid_size: int
    x: np.ndarray
    diagonal: np.ndarray
    off_diagonal: np.ndarray
    eigenvalues: np.ndarray

    @property
    def matrix(self) -> np.ndarray:
        """Dense symmetric form; only sensible for small grids."""
        return np.diag(self.diagonal) + np.diag(self.off_diagonal, 1) + np.diag(self.off_diagonal, -1)


# gap model


class ReducedProblem(FrozenModel):
    n: int = Field(default=2, ge=2)
    phi0: float = Field(gt=0.0, lt=math.pi / 2)
    mu: float = Field(gt=0.0)
    t: float = Field(default=0.0, ge=0.0)
    j: int = Field(default=1, ge=1)

    @field_validator("phi0", "mu", "t")
    @classmethod
    def _finite(cls, value: float) -> float:
        if not math.isfinite(value):
            raise ValueError("must be finite")
        return value

    @property
    def effective_mu(self) -> float:
        return self.j * self.j * self.mu

    @property
    def delta(self) -> float:
        return 1.0 / (self.effective_mu * 2.0 * math.tan(self.phi0))


class RescaledFrame(FrozenModel):
    problem: ReducedProblem
    delta: float
    x_max: float
    x: np.ndarray
    n_k: tuple[float, ...]
    alpha_tilde: tuple[float, ...]
    eigenvalues: tuple[float, ...]
    u_tilde: np.ndarray

    @property
    def cube_root_delta(self) -> float:
        return self.delta ** (1.0 / 3.0)

    @property
    def phi(self) -> np.ndarray:
        return self.problem.phi0 - self.cube_root_delta * self.x


# asymptotics


class NormPair(FrozenModel):
    dim: int = Field(ge=1)
    gram_base: np.ndarray
    gram_tilde: np.ndarray
    c0: float = Field(ge=1.0)


class PerturbationReport(FrozenModel):
    k: int
    lower_bound_ok: bool
    upper_bound_ok: bool
    eigenvector_bound_ok: bool | None
    gamma_k: float
    margin: float
    alpha_k: float
    alpha_tilde_k: float
    eps_k: float
    eps_tilde_k: float
    harness_constant: float
    eigenvector_distance: float | None = None
    eigenvector_bound: float | None = None


class FiniteAiryResult(FrozenModel):
    R: float
    alpha_R: tuple[float, ...]
    x: np.ndarray
    u_R: np.ndarray
    deviation: tuple[float, ...]


class RateFit(NamedTuple):
    slope: float
    intercept: float
    r2: float


class CorollaryCheck(NamedTuple):
    scaled_integral: float
    target: float
    deviation: float


# theorem pipeline


class DomainSpec(FrozenModel):
    phi0: float = Field(gt=0.0, lt=math.pi / 2)
    mu: float = Field(gt=0.0)
    n: int = Field(default=2, ge=2)
    corner_points: tuple[tuple[float, float], ...] | None = None


class GapReport(FrozenModel):
    phi0: float
    mu: float
    n: int
    gamma0: float
    gamma_t: float
    t: float
    integral_I: float
    hf_residual: float
    mode_ordering_ok: bool
    verdict: bool
    eigenvalues0: tuple[float, ...] = ()
    eigenvalues_t: tuple[float, ...] = ()
    hf_slope: float | None = None
    largest_verified_t: float | None = None
    refinement: tuple[tuple[float, float, float], ...] = ()
    higher_gap: dict[str, Any] | None = None
    diameter: float | None = None
    pde_claim: Literal["numerical", "analytic-transfer"] = "numerical"
    ladder: tuple[dict[str, Any], ...] = ()

    @model_validator(mode="after")
    def _gap_positive(self) -> "GapReport":
        if not self.gamma0 > 0:
            raise ValueError("gamma0 must be > 0")
        return self


# cli


def _check_mu_list(values: tuple[float, ...]) -> tuple[float, ...]:
    if not values or any(not (v > 0 and math.isfinite(v)) for v in values):
        raise ValueError("mu values must be positive and finite")
    return values


Command = Literal["airy-table", "eigen", "rescale-sweep", "corollary-sweep", "perturb-battery", "theorem"]


class AiryTableParams(FrozenModel):
    x_min: float = Field(default=-10.0, ge=-200.0)
    x_max: float = Field(default=5.0, le=100.0)
    step: float = Field(default=0.01, gt=0.0)

    @model_validator(mode="after")
    def _ordered(self) -> "AiryTableParams":
        if self.x_min >= self.x_max:
            raise ValueError("x_min must be < x_max")
        return self


class EigenParams(FrozenModel):
    phi0: float = Field(default=math.pi / 4, gt=0.0, lt=math.pi / 2)
    mu: float = Field(default=1e6, gt=0.0)
    n: int = Field(default=2, ge=2)
    K: int = Field(default=2, ge=1)
    t: float = Field(default=0.0, ge=0.0)
    j: int = Field(default=1, ge=1)
    tol: float = Field(default=1e-12, ge=1e-13, le=1e-4)
    grid_points: int = Field(default=4096, ge=16)
    backend: Literal["shooting", "matrix"] = "shooting"


class RescaleSweepParams(FrozenModel):
    phi0: float = Field(default=math.pi / 4, gt=0.0, lt=math.pi / 2)
    mu: tuple[float, ...] = (1e4, 1e5, 1e6, 1e7)
    n: int = Field(default=2, ge=2)
    K: int = Field(default=2, ge=1, le=50)

    @field_validator("mu")
    @classmethod
    def _positive(cls, values: tuple[float, ...]) -> tuple[float, ...]:
        return _check_mu_list(values)


class CorollarySweepParams(FrozenModel):
    phi0: float = Field(default=math.pi / 4, gt=0.0, lt=math.pi / 2)
    mu: tuple[float, ...] = (1e4, 1e5, 1e6, 1e7)
    n: int = Field(default=2, ge=2)

    @field_validator("mu")
    @classmethod
    def _positive(cls, values: tuple[float, ...]) -> tuple[float, ...]:
        return _check_mu_list(values)


class PerturbBatteryParams(FrozenModel):
    instances: int = Field(default=500, ge=1)
    seed: int = Field(default=20240527, ge=0)
    max_dim: int = Field(default=12, ge=3)
    scale: float = Field(default=1e-2, gt=0.0, le=1e-2)


class TheoremParams(FrozenModel):
    D0: float = Field(default=1.0, gt=0.0)
    n: int = Field(default=2, ge=2)
    mu_ladder: tuple[float, ...] | None = None


PARAMS_BY_COMMAND: dict[str, type[FrozenModel]] = {
    "airy-table": AiryTableParams,
    "eigen": EigenParams,
    "rescale-sweep": RescaleSweepParams,
    "corollary-sweep": CorollarySweepParams,
    "perturb-battery": PerturbBatteryParams,
    "theorem": TheoremParams,
}


class RunConfig(FrozenModel):
    command: Command
    parameters: dict[str, Any] = {}
    output_path: Path | None = None
    format: Literal["csv", "json"] = "json"
    jobs: int = Field(default=1, ge=1)

    @model_validator(mode="after")
    def _validate_parameters(self) -> "RunConfig":
        PARAMS_BY_COMMAND[self.command](**self.parameters)
        return self

    @property
    def params(self) -> FrozenModel:
        return PARAMS_BY_COMMAND[self.command](**self.parameters)
