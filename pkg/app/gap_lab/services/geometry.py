"""Upper half-plane geometry of the wedge family.

A point at polar radius r and angle phi from the imaginary axis sits at
(r sin phi, r cos phi). The rays {phi = const} are hypercycles around the
geodesic {phi = 0}; their distance to it is artanh(sin phi).
"""

from __future__ import annotations

import logging
import math
from typing import Any

import numpy as np
from scipy.optimize import bisect

from app.gap_lab.core.errors import BracketError, DomainError, RangeError, require_range
from app.gap_lab.models.schemas import DomainSpec

logger = logging.getLogger(__name__)

MIN_BOUNDARY_SAMPLES = 64
MONOTONE_SAMPLES = 9


def hyperbolic_distance(p: tuple[float, float], q: tuple[float, float]) -> float:
    (xp, yp), (xq, yq) = p, q
    if yp <= 0 or yq <= 0:
        raise DomainError("points must lie in the upper half-plane (y > 0)", y_p=yp, y_q=yq)
    chord2 = (xp - xq) ** 2 + (yp - yq) ** 2
    return 2.0 * math.asinh(math.sqrt(chord2 / (4.0 * yp * yq)))


def _pairwise_max(points: np.ndarray) -> float:
    x, y = points[:, 0], points[:, 1]
    chord2 = (x[:, None] - x[None, :]) ** 2 + (y[:, None] - y[None, :]) ** 2
    return float(2.0 * np.arcsinh(np.sqrt(np.max(chord2 / (4.0 * y[:, None] * y[None, :])))))


def polar_to_half_plane(r: float, phi: float) -> tuple[float, float]:
    return r * math.sin(phi), r * math.cos(phi)


def half_plane_to_polar(x: float, y: float) -> tuple[float, float]:
    if y <= 0:
        raise DomainError("point must lie in the upper half-plane (y > 0)", y=y)
    return math.hypot(x, y), math.atan2(x, y)


def signed_distance_to_axis(phi: float) -> float:
    require_range("phi", phi, -math.pi / 2, math.pi / 2, closed=False)
    return math.atanh(math.sin(phi))


def phi_of_length(D: float) -> float:
    """Angle whose ray lies at distance D from {phi = 0}."""
    require_range("D", D, 0.0, math.inf, closed=False)
    return math.asin(math.tanh(D))


def outer_radius(mu: float) -> float:
    return math.exp(math.pi / math.sqrt(mu))


def domain_spec(phi0: float, mu: float, n: int = 2) -> DomainSpec:
    big = outer_radius(mu)
    corners = tuple(polar_to_half_plane(r, phi) for r in (1.0, big) for phi in (0.0, phi0))
    return DomainSpec(phi0=phi0, mu=mu, n=n, corner_points=corners)


def boundary_points(spec: DomainSpec, boundary_samples: int) -> np.ndarray:
    """Corners plus ``boundary_samples`` points on each of the four edges."""
    big = outer_radius(spec.mu)
    radii = np.geomspace(1.0, big, boundary_samples)
    angles = np.linspace(0.0, spec.phi0, boundary_samples)
    polar = np.concatenate(
        [
            np.column_stack([radii, np.zeros_like(radii)]),
            np.column_stack([radii, np.full_like(radii, spec.phi0)]),
            np.column_stack([np.ones_like(angles), angles]),
            np.column_stack([np.full_like(angles, big), angles]),
        ]
    )
    points = np.column_stack([polar[:, 0] * np.sin(polar[:, 1]), polar[:, 0] * np.cos(polar[:, 1])])
    return np.vstack([np.asarray(spec.corner_points or domain_spec(spec.phi0, spec.mu).corner_points), points])


def diameter(spec: DomainSpec, boundary_samples: int = 128) -> float:
    if spec.n != 2:
        raise RangeError("diameter is computed for n = 2 domains", n=spec.n)
    if boundary_samples < MIN_BOUNDARY_SAMPLES:
        raise RangeError(f"boundary_samples must be >= {MIN_BOUNDARY_SAMPLES}", boundary_samples=boundary_samples)
    return _pairwise_max(boundary_points(spec, boundary_samples))


def diameter_bounds(phi0: float, mu: float) -> tuple[float, float]:
    """(D, D + cosh(D) pi / sqrt(mu)) with D the distance of the ray phi0 to the axis."""
    d = signed_distance_to_axis(phi0)
    return d, d + math.cosh(d) * math.pi / math.sqrt(mu)


def find_phi0_for_diameter(D0: float, mu: float, tol: float = 1e-7, boundary_samples: int = 128) -> float:
    """Angle phi0 with diam(wedge(phi0, mu)) = D0 within tol, bracketed by phi_{D0/2} and phi_{3 D0/2}."""
    require_range("D0", D0, 0.0, math.inf, closed=False)
    require_range("tol", tol, 1e-14, 1.0)
    phi_lo = phi_of_length(0.5 * D0)
    phi_hi = min(phi_of_length(1.5 * D0), math.nextafter(math.pi / 2, 0.0))

    def diam(phi: float) -> float:
        return diameter(domain_spec(phi, mu), boundary_samples)

    samples = np.linspace(phi_lo, phi_hi, MONOTONE_SAMPLES)
    values = [diam(float(phi)) for phi in samples]
    diagnostics: dict[str, Any] = {"phi_lo": phi_lo, "phi_hi": phi_hi, "diam_lo": values[0], "diam_hi": values[-1], "mu": mu}
    if not values[0] < D0 < values[-1]:
        logger.warning("diameter bracket invalid for D0=%.6g mu=%.6g: [%.9g, %.9g]", D0, mu, values[0], values[-1])
        raise BracketError("D0 is not bracketed by the endpoint diameters", D0=D0, **diagnostics)
    if any(b <= a for a, b in zip(values, values[1:])):
        raise BracketError("diameter is not increasing on the bracket", D0=D0, samples=values, **diagnostics)

    phi0 = bisect(lambda phi: diam(phi) - D0, phi_lo, phi_hi, xtol=0.01 * tol, maxiter=200)
    achieved = diam(phi0)
    if abs(achieved - D0) > tol:
        raise BracketError("bisection did not reach the diameter tolerance", D0=D0, achieved=achieved, phi0=phi0, **diagnostics)
    logger.info("phi0=%.12g gives diameter %.12g (D0=%.6g, mu=%.6g)", phi0, achieved, D0, mu)
    return float(phi0)
