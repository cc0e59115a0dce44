from __future__ import annotations

import math

import numpy as np
import pytest
from numpy.testing import assert_allclose
from pydantic import ValidationError
from scipy.integrate import quad

from app.gap_lab.core.errors import ContractError, RangeError, ShapeError
from app.gap_lab.models.schemas import ReducedProblem
from app.gap_lab.services.airy import airy_ai, airy_zeros, eval_airy, half_line_eigenfunction
from app.gap_lab.services.asymptotics import fit_rate
from app.gap_lab.services.gap_model import (
    alpha_to_eigenvalue,
    apply_airy_operator,
    apply_rescaled_operator,
    coefficient_defect,
    eigen_residual,
    eigenvalue_guess,
    eval_potential,
    eval_potential_derivative,
    frame_for,
    frame_weight,
    hellmann_feynman_derivative,
    pde_cross_check,
    reduced_problem_as_sl,
    rescale,
    rescaled_spectrum,
    solve_reduced,
)
from app.gap_lab.solvers.quadrature import simpson_integral
from app.gap_lab.solvers.shooting import sample
from app.gap_lab.utils.math_utils import first_derivative

QUARTER = math.pi / 4


def test_potential_values():
    assert eval_potential(0.0) == 0.0
    assert eval_potential(QUARTER) == pytest.approx(0.881373587019543, rel=1e-13)
    assert eval_potential_derivative(QUARTER) == pytest.approx(math.sqrt(2.0), rel=1e-13)
    for phi in (0.1, 0.7, 1.3):
        integral, _ = quad(lambda s: 1.0 / math.cos(s), 0.0, phi, epsabs=1e-13, epsrel=1e-13)
        assert eval_potential(phi) == pytest.approx(integral, abs=1e-10)


def test_potential_vectorised_and_checked():
    phi = np.array([0.0, 0.5, 1.0])
    assert_allclose(eval_potential(phi), np.arctanh(np.sin(phi)))
    with pytest.raises(RangeError):
        eval_potential(math.pi / 2)
    with pytest.raises(RangeError):
        eval_potential_derivative(-0.1)


def test_reduced_problem_validation():
    with pytest.raises(ValidationError):
        ReducedProblem(phi0=math.pi / 2, mu=1.0)
    with pytest.raises(ValidationError):
        ReducedProblem(phi0=0.5, mu=-1.0)
    with pytest.raises(ValidationError):
        ReducedProblem(n=1, phi0=0.5, mu=1.0)
    with pytest.raises(ValidationError):
        ReducedProblem(phi0=0.5, mu=1.0, t=-1.0)


def test_delta_and_effective_mu():
    problem = ReducedProblem(phi0=QUARTER, mu=1e6)
    assert problem.delta == pytest.approx(5e-7, rel=1e-12)
    assert ReducedProblem(phi0=QUARTER, mu=1e6, j=2).effective_mu == pytest.approx(4e6)


@pytest.mark.parametrize("n", [2, 3, 5])
def test_coefficients(n):
    problem = ReducedProblem(n=n, phi0=1.0, mu=50.0, t=0.3)
    sl = reduced_problem_as_sl(problem)
    phi = np.linspace(0.0, 1.0, 11)
    c = np.cos(phi)
    assert_allclose(sample(sl.p, phi), c ** (2 - n))
    assert_allclose(sample(sl.w, phi), c ** (-n))
    assert_allclose(sample(sl.q0, phi), 50.0 * c ** (2 - n) + 0.3 * np.arctanh(np.sin(phi)) * c ** (-n))
    assert (sl.x_lo, sl.x_hi) == (0.0, 1.0)


def test_n2_reduces_to_unit_stiffness():
    sl = reduced_problem_as_sl(ReducedProblem(n=2, phi0=0.9, mu=7.0))
    phi = np.linspace(0.0, 0.9, 7)
    assert_allclose(sample(sl.p, phi), 1.0)
    assert_allclose((sample(sl.q0, phi) - 3.0 * sample(sl.w, phi)) / sample(sl.p, phi), 7.0 - 3.0 / np.cos(phi) ** 2)


def test_second_radial_mode_is_four_mu(shooting):
    second = shooting.eigenvalues(reduced_problem_as_sl(ReducedProblem(phi0=QUARTER, mu=1e3, j=2)), 3)
    scaled = shooting.eigenvalues(reduced_problem_as_sl(ReducedProblem(phi0=QUARTER, mu=4e3)), 3)
    assert_allclose(second, scaled, rtol=1e-13)


def test_guess_close_at_large_mu(shooting):
    problem = ReducedProblem(phi0=QUARTER, mu=1e6)
    values = shooting.eigenvalues(reduced_problem_as_sl(problem), 2)
    for k, lam in enumerate(values, start=1):
        assert lam == pytest.approx(eigenvalue_guess(problem, k), rel=1e-3)


def test_higher_dimension_residual(shooting):
    problem = ReducedProblem(n=3, phi0=0.8, mu=1e3)
    sl = reduced_problem_as_sl(problem)
    for pair in shooting.solve_spectrum(sl, 3):
        h = pair.x[1] - pair.x[0]
        flux = sample(sl.p, pair.x) * pair.dy
        residual = -first_derivative(flux, h) + (sample(sl.q0, pair.x) - pair.eigenvalue * sample(sl.w, pair.x)) * pair.y
        scale = pair.eigenvalue * np.max(np.abs(sample(sl.w, pair.x) * pair.y))
        assert np.max(np.abs(residual)) / scale < 1e-7


def test_hellmann_feynman_matches_difference_quotient(shooting):
    problem = ReducedProblem(phi0=QUARTER, mu=1e3)
    pair = solve_reduced(problem, 1, shooting)[0]
    slope = hellmann_feynman_derivative(problem, pair)
    t = 1e-3
    shifted = shooting.eigenvalue(reduced_problem_as_sl(problem.model_copy(update={"t": t})), 1)
    assert (shifted - pair.eigenvalue) / t == pytest.approx(slope, abs=1e-4)
    assert 0.0 < slope < eval_potential(QUARTER)


@pytest.fixture(scope="module")
def frame():
    from app.gap_lab.solvers.shooting import ShootingSolver

    return rescaled_spectrum(ReducedProblem(phi0=QUARTER, mu=1e6), 2, ShootingSolver())


def test_rescaled_frame_is_normalised(frame):
    weight = frame_weight(frame)
    for u in frame.u_tilde:
        assert simpson_integral(weight * u**2, frame.x) == pytest.approx(1.0, abs=1e-7)
    assert frame.x[0] == 0.0
    assert frame.x[-1] == pytest.approx(60.0)
    assert frame.u_tilde[0][0] == pytest.approx(0.0, abs=1e-10)


def test_rescaled_eigenvalues_near_airy_zeros(frame):
    a = airy_zeros(2).a
    s = frame.cube_root_delta
    for alpha, a_k in zip(frame.alpha_tilde, a):
        assert abs(alpha - a_k) < 50.0 * s
        assert alpha > a_k


def test_alpha_round_trip(frame):
    for alpha, lam in zip(frame.alpha_tilde, frame.eigenvalues):
        assert alpha_to_eigenvalue(frame, alpha) == pytest.approx(lam, rel=1e-9)


def test_rescaled_operator_eigen_residual(frame):
    for k in (1, 2):
        assert eigen_residual(frame, k) < 1e-5


def test_rescaled_eigenfunction_near_half_line_one(frame):
    v = half_line_eigenfunction(1, 60.0)
    assert v.x.shape == frame.x.shape
    s = frame.cube_root_delta
    assert np.max(np.abs(frame.u_tilde[0] - v.values)) < 6.0 * s
    assert np.max(np.abs(frame.u_tilde[0])) == pytest.approx(np.max(np.abs(v.values)), rel=6.0 * s)


def test_rescale_contracts(shooting):
    perturbed = ReducedProblem(phi0=QUARTER, mu=1e4, t=0.5)
    pairs = solve_reduced(ReducedProblem(phi0=QUARTER, mu=1e4), 1, shooting)
    with pytest.raises(ContractError):
        rescale(perturbed, pairs)
    with pytest.raises(ShapeError):
        rescale(ReducedProblem(phi0=QUARTER, mu=1e4), [])


def test_operator_rejects_foreign_grid():
    bare = frame_for(ReducedProblem(phi0=QUARTER, mu=1e4))
    with pytest.raises(ShapeError):
        apply_rescaled_operator(bare, np.ones(bare.x.size + 1))
    with pytest.raises(ShapeError):
        apply_rescaled_operator(bare, (bare.x + 1.0, np.ones(bare.x.size)))
    with pytest.raises(ShapeError):
        apply_airy_operator(np.linspace(0.0, 1.0, 10), np.ones(9))


def test_coefficient_defect_is_quadratic():
    bare = frame_for(ReducedProblem(phi0=QUARTER, mu=1e6))
    s = bare.cube_root_delta
    x = np.linspace(0.5, 10.0, 40)
    ratio = -coefficient_defect(bare, x) / (s * x**2)
    # tan(phi0) = 1: E(x) = x - 2 s x^2 + ...
    assert np.all((ratio > 1.5) & (ratio < 2.5))


def test_operator_difference_shrinks_like_cube_root_delta():
    norms, deltas = [], []
    for mu in (1e4, 1e5, 1e6, 1e7):
        bare = frame_for(ReducedProblem(phi0=QUARTER, mu=mu))
        a1 = airy_zeros(1).a[0]
        values = airy_ai(bare.x - a1) / abs(eval_airy(-a1).ai_prime)
        diff = apply_rescaled_operator(bare, values) - apply_airy_operator(bare.x, values)
        norms.append(math.sqrt(simpson_integral(diff**2, bare.x)))
        deltas.append(bare.delta)
    assert fit_rate(deltas, norms).slope == pytest.approx(1.0 / 3.0, abs=0.1)


@pytest.mark.parametrize("t", [0.0, 2.0])
def test_pde_cross_check(shooting, t):
    result = pde_cross_check(ReducedProblem(phi0=QUARTER, mu=100.0, t=t), shooting)
    assert np.max(result["relative_deviation"]) < 3e-3
