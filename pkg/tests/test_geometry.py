from __future__ import annotations

import math

import numpy as np
import pytest
from scipy.integrate import quad

from app.gap_lab.core.errors import BracketError, DomainError, RangeError
from app.gap_lab.services.geometry import (
    diameter,
    diameter_bounds,
    domain_spec,
    find_phi0_for_diameter,
    half_plane_to_polar,
    hyperbolic_distance,
    outer_radius,
    phi_of_length,
    polar_to_half_plane,
    signed_distance_to_axis,
)


def test_distance_along_imaginary_axis():
    assert hyperbolic_distance((0.0, 1.0), (0.0, math.e)) == pytest.approx(1.0, rel=1e-14)
    assert hyperbolic_distance((0.3, 2.0), (0.3, 2.0)) == 0.0


def test_distance_along_unit_circle_is_potential():
    phi = math.pi / 4
    d = hyperbolic_distance(polar_to_half_plane(1.0, phi), (0.0, 1.0))
    assert d == pytest.approx(0.881373587019543, rel=1e-12)
    integral, _ = quad(lambda s: 1.0 / math.cos(s), 0.0, phi, epsabs=1e-13)
    assert d == pytest.approx(integral, abs=1e-10)


def test_distance_is_dilation_invariant():
    p, q = (0.2, 0.7), (-0.4, 1.9)
    assert hyperbolic_distance(p, q) == pytest.approx(hyperbolic_distance((3 * p[0], 3 * p[1]), (3 * q[0], 3 * q[1])))


def test_distance_rejects_lower_half_plane():
    with pytest.raises(DomainError):
        hyperbolic_distance((0.0, -1.0), (0.0, 1.0))


def test_polar_coordinates_invert():
    x, y = polar_to_half_plane(2.5, 0.4)
    r, phi = half_plane_to_polar(x, y)
    assert (r, phi) == (pytest.approx(2.5), pytest.approx(0.4))


def test_signed_distance_is_odd():
    assert signed_distance_to_axis(-0.3) == pytest.approx(-signed_distance_to_axis(0.3))
    with pytest.raises(RangeError):
        signed_distance_to_axis(math.pi / 2)


@pytest.mark.parametrize("D", [0.1, 1.0, 3.0])
def test_phi_of_length_inverts_distance(D):
    assert signed_distance_to_axis(phi_of_length(D)) == pytest.approx(D, rel=1e-12)


def test_outer_radius():
    assert outer_radius(1e6) == pytest.approx(math.exp(math.pi / 1000.0))


@pytest.mark.parametrize("phi0,mu", [(0.3, 1e2), (math.pi / 4, 1e4), (1.2, 1e6)])
def test_diameter_within_bounds(phi0, mu):
    lo, hi = diameter_bounds(phi0, mu)
    d = diameter(domain_spec(phi0, mu))
    assert lo - 1e-12 <= d <= hi + 1e-12


def test_diameter_shrinks_with_mu():
    spec_small, spec_large = domain_spec(0.7, 1e4), domain_spec(0.7, 4e4)
    assert diameter(spec_large) <= diameter(spec_small)


def test_diameter_limits():
    with pytest.raises(RangeError):
        diameter(domain_spec(0.7, 1e4, n=3))
    with pytest.raises(RangeError):
        diameter(domain_spec(0.7, 1e4), boundary_samples=16)


def test_corner_points():
    spec = domain_spec(0.5, 1e4)
    assert len(spec.corner_points) == 4
    assert spec.corner_points[0] == (0.0, 1.0)
    assert np.all(np.array(spec.corner_points)[:, 1] > 0)


def test_find_phi0_for_unit_diameter():
    phi0 = find_phi0_for_diameter(1.0, 1e6, tol=1e-7)
    assert abs(diameter(domain_spec(phi0, 1e6)) - 1.0) <= 1e-7
    assert phi_of_length(0.5) < phi0 < phi_of_length(1.0)


def test_find_phi0_reports_unbracketed_diameter():
    with pytest.raises(BracketError) as info:
        find_phi0_for_diameter(1.0, 1.0)
    assert info.value.diagnostics["diam_lo"] > 1.0
