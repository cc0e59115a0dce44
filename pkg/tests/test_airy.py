from __future__ import annotations

import math

import numpy as np
import pytest
from numpy.testing import assert_allclose
from scipy import special

from app.gap_lab.core.errors import RangeError
from app.gap_lab.services.airy import (
    airy_moment,
    airy_table,
    airy_zeros,
    eval_airy,
    evaluate_airy_grid,
    half_line_eigenfunction,
    model_integral,
)
from app.gap_lab.solvers.quadrature import simpson_integral

A1 = 2.338107410459767
A2 = 4.087949444130971


def test_values_match_scipy():
    x = np.linspace(-30.0, 30.0, 2401)
    ai, aip, bi, bip = evaluate_airy_grid(x)
    ref_ai, ref_aip, ref_bi, ref_bip = special.airy(x)
    assert_allclose(ai, ref_ai, rtol=1e-9, atol=1e-11)
    assert_allclose(aip, ref_aip, rtol=1e-9, atol=1e-10)
    assert_allclose(bi, ref_bi, rtol=1e-9, atol=1e-11)
    assert_allclose(bip, ref_bip, rtol=1e-9, atol=1e-10)


@pytest.mark.parametrize("x0", [-12.0, 12.0])
def test_continuous_across_series_limit(x0):
    x = np.array([x0 - 1e-9, x0, x0 + 1e-9])
    for values in evaluate_airy_grid(x):
        assert np.max(values) - np.min(values) <= 1e-7 * max(1.0, float(np.max(np.abs(values))))


def test_exact_values_at_origin():
    v = eval_airy(0.0)
    assert v.ai == pytest.approx(1.0 / (3.0 ** (2.0 / 3.0) * math.gamma(2.0 / 3.0)), rel=1e-14)
    assert v.ai_prime == pytest.approx(-1.0 / (3.0 ** (1.0 / 3.0) * math.gamma(1.0 / 3.0)), rel=1e-14)


def test_wronskian_is_one_over_pi():
    table = airy_table(-10.0, 5.0, 0.01)
    assert table["x"].size == 1501
    assert_allclose(table["wronskian"], 1.0 / math.pi, rtol=1e-10)


def test_far_field_is_finite():
    ai, aip, bi, bip = evaluate_airy_grid(np.array([-200.0, 100.0]))
    for values in (ai, aip, bi, bip):
        assert np.all(np.isfinite(values))
    assert 0.0 < ai[1] < 1e-280


@pytest.mark.parametrize("x", [-200.5, 100.5, float("nan")])
def test_outside_range_raises(x):
    with pytest.raises(RangeError):
        evaluate_airy_grid(np.array([x]))


def test_zeros_match_scipy():
    zeros = airy_zeros(10)
    assert len(zeros) == 10
    ref = -special.ai_zeros(10)[0]
    assert_allclose(zeros.a, ref, rtol=0.0, atol=1e-10)
    assert zeros.a[0] == pytest.approx(A1, abs=1e-11)
    assert zeros.a[1] == pytest.approx(A2, abs=1e-11)


def test_zero_count_limits():
    assert len(airy_zeros(50)) == 50
    with pytest.raises(RangeError):
        airy_zeros(0)
    with pytest.raises(RangeError):
        airy_zeros(51)


@pytest.mark.parametrize("k", [1, 2, 3, 5])
def test_half_line_eigenfunction_normalised(k):
    v = half_line_eigenfunction(k, 40.0)
    assert v.values[0] == pytest.approx(0.0, abs=1e-11)
    assert simpson_integral(v.values**2, v.x) == pytest.approx(1.0, abs=1e-9)
    residual = -np.gradient(np.gradient(v.values, v.x), v.x) + (v.x - v.eigenvalue) * v.values
    assert np.max(np.abs(residual[4:-4])) < 1e-3


def test_half_line_eigenfunction_on_long_interval():
    v = half_line_eigenfunction(1, 150.0)
    assert v.x[-1] == pytest.approx(150.0)
    assert np.all(np.isfinite(v.values))
    assert np.all(v.values[v.x > 110.0] == 0.0)
    assert simpson_integral(v.values**2, v.x) == pytest.approx(1.0, abs=1e-9)
    assert model_integral(150.0) == pytest.approx(2.0 * (A2 - A1) / 3.0, abs=1e-8)


def test_half_line_eigenfunction_needs_room():
    with pytest.raises(RangeError):
        half_line_eigenfunction(2, A2 + 5.0)


@pytest.mark.parametrize("k", [1, 2, 3, 4, 5])
def test_moment_is_two_thirds_of_zero(k):
    a_k = airy_zeros(k).a[-1]
    assert airy_moment(k, 40.0) == pytest.approx(2.0 * a_k / 3.0, abs=1e-8)


def test_model_integral():
    assert model_integral(40.0) == pytest.approx(2.0 * (A2 - A1) / 3.0, abs=1e-8)
    assert model_integral(40.0) == pytest.approx(1.1665613557808, abs=1e-8)
    with pytest.raises(RangeError):
        model_integral(20.0)
