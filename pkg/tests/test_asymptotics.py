from __future__ import annotations

import copy
import math

import numpy as np
import pytest

from app.gap_lab.core.errors import ContractError, DegeneracyError, DomainError, ShapeError
from app.gap_lab.models.schemas import CorollarySweepParams, ReducedProblem, RescaleSweepParams
from app.gap_lab.services import asymptotics, gap_model, run_status
from app.gap_lab.services.airy import airy_zeros
from app.gap_lab.services.asymptotics import (
    _ordered_map,
    check_corollary_integral,
    check_perturbation_lemma,
    corollary_sweep,
    finite_airy,
    fit_rate,
    gap_integral,
    harness_constant,
    make_norm_pair,
    norm_ratio_range,
    random_instance,
    rescale_sweep,
    run_perturbation_battery,
)
from app.gap_lab.services.gap_model import solve_reduced
from app.gap_lab.services.pipeline import PipelineService
from app.gap_lab.utils.math_utils import count_sign_changes

QUARTER = math.pi / 4


# perturbation bounds


def test_harness_constant():
    assert harness_constant(1.0) == 8.0
    assert harness_constant(2.0) == 64.0


def test_norm_pair_constant():
    norms = make_norm_pair(np.eye(3), np.diag([1.0, 4.0, 0.25]))
    assert norms.c0 == pytest.approx(2.0)
    lo, hi = norm_ratio_range(norms, np.random.default_rng(0).standard_normal((3, 50)))
    assert 1.0 / norms.c0 - 1e-12 <= lo <= hi <= norms.c0 + 1e-12


def test_norm_pair_rejects_bad_input():
    with pytest.raises(ShapeError):
        make_norm_pair(np.eye(3), np.eye(2))
    with pytest.raises(DomainError):
        make_norm_pair(np.eye(2), np.diag([1.0, -1.0]))


def test_identical_operators_have_zero_difference():
    norms = make_norm_pair(np.eye(4), np.eye(4))
    a = np.diag([1.0, 2.0, 3.5, 5.0])
    report = check_perturbation_lemma(norms, a, a, 2)
    assert report.alpha_tilde_k == pytest.approx(2.0)
    assert report.alpha_k == pytest.approx(2.0)
    assert report.lower_bound_ok and report.upper_bound_ok and report.eigenvector_bound_ok
    assert report.eigenvector_distance == pytest.approx(0.0, abs=1e-12)
    assert report.gamma_k == pytest.approx(1.0)


def test_small_symmetric_perturbation():
    norms = make_norm_pair(np.eye(3), np.eye(3))
    a = np.diag([1.0, 2.0, 3.0])
    e = 1e-3 * np.array([[0.0, 1.0, 0.0], [1.0, 0.5, 1.0], [0.0, 1.0, 0.0]])
    report = check_perturbation_lemma(norms, a, a + e, 2)
    assert report.lower_bound_ok and report.upper_bound_ok and report.eigenvector_bound_ok
    assert report.margin > 0
    assert report.harness_constant == 8.0


def test_non_self_adjoint_rejected():
    norms = make_norm_pair(np.eye(2), np.eye(2))
    with pytest.raises(ContractError):
        check_perturbation_lemma(norms, np.array([[1.0, 1.0], [0.0, 2.0]]), np.eye(2), 1)


def test_degenerate_eigenvalue_raises_with_report():
    norms = make_norm_pair(np.eye(3), np.eye(3))
    a = np.diag([1.0, 1.0, 2.0])
    with pytest.raises(DegeneracyError) as info:
        check_perturbation_lemma(norms, a, a, 1)
    report = info.value.report
    assert report.eigenvector_bound_ok is None
    assert report.lower_bound_ok and report.upper_bound_ok


def test_random_instance_structure():
    rng = np.random.default_rng(3)
    norms, a, a_tilde = random_instance(rng, 6)
    s = norms.gram_base @ a
    np.testing.assert_allclose(s, s.T, atol=1e-10)
    st = norms.gram_tilde @ a_tilde
    np.testing.assert_allclose(st, st.T, atol=1e-10)
    alphas = np.sort(np.linalg.eigvals(a).real)
    assert 1.0 - 1e-9 <= alphas[0] <= 2.0 + 1e-9
    gaps = np.diff(alphas)
    assert np.all((gaps > 0.5 - 1e-9) & (gaps < 1.5 + 1e-9))


def test_battery_passes_and_is_reproducible():
    first = run_perturbation_battery(500, seed=20240527)
    assert first["instances"] == 500
    assert first["failed"] == 0
    assert first["passed"] == 500
    assert first["min_margin"] >= 0
    assert first["eigenvector_checked"] > 0
    again = run_perturbation_battery(50, seed=20240527)
    assert [row["alpha_tilde_k"] for row in again["rows"]] == [row["alpha_tilde_k"] for row in first["rows"][:50]]


# rate fits


def test_fit_rate_recovers_powers():
    xs = [1e-8, 1e-7, 1e-6, 1e-5]
    fit = fit_rate(xs, [3.0 * x ** (1.0 / 3.0) for x in xs])
    assert fit.slope == pytest.approx(1.0 / 3.0, abs=1e-12)
    assert fit.intercept == pytest.approx(math.log(3.0), abs=1e-10)
    assert fit.r2 == pytest.approx(1.0)


def test_fit_rate_rejects_bad_data():
    with pytest.raises(DomainError):
        fit_rate([1.0, 2.0], [1.0, 2.0])
    with pytest.raises(DomainError):
        fit_rate([1.0, 2.0, 3.0], [1.0, 0.0, 2.0])
    with pytest.raises(ShapeError):
        fit_rate([1.0, 2.0, 3.0], [1.0, 2.0])


# finite Airy problems


def test_finite_airy_converges_to_zeros():
    result = finite_airy(30.0, 3)
    a = airy_zeros(3).a
    for alpha, a_k in zip(result.alpha_R, a):
        assert abs(alpha - a_k) < 1e-9
    assert count_sign_changes(result.u_R[1]) == 1
    assert result.x[0] == 0.0 and result.x[-1] == 30.0


@pytest.mark.slow
def test_finite_airy_decreases_in_R():
    a = airy_zeros(3).a
    radii = [8.0, 9.0, 10.0, 11.0]
    results = [finite_airy(R, 3) for R in radii]
    for k in range(3):
        column = [r.alpha_R[k] for r in results]
        assert all(b <= a_prev + 1e-11 for a_prev, b in zip(column, column[1:]))
        assert all(value >= a[k] - 1e-10 for value in column)
    deviations = np.array([r.deviation[2] for r in results])
    assert np.all(deviations > 1e-9)
    slope = np.polyfit(radii, np.log(deviations), 1)[0]
    assert slope <= -1.0


# corollary integral


def test_corollary_integral_at_large_mu(shooting):
    check = check_corollary_integral(ReducedProblem(phi0=QUARTER, mu=1e6), shooting)
    assert check.target == pytest.approx(-1.1665613557808, abs=1e-8)
    assert check.scaled_integral < 0
    assert abs(check.deviation) < 0.25


def test_corollary_integral_contracts(shooting):
    with pytest.raises(ContractError):
        check_corollary_integral(ReducedProblem(phi0=QUARTER, mu=1e4, t=1.0), shooting)


def test_gap_integral_vanishes_for_equal_modes(shooting):
    problem = ReducedProblem(phi0=QUARTER, mu=1e4)
    h1 = solve_reduced(problem, 1, shooting)[0]
    assert gap_integral(problem, h1.x, h1.y, h1.y) == 0.0


# sweeps


@pytest.mark.slow
def test_rescale_sweep_rates(shooting):
    result = rescale_sweep(QUARTER, [1e4, 1e5, 1e6, 1e7], n=2, K=2, solver=shooting)
    fits = result["fits"]
    for k in (1, 2):
        assert 0.23 <= fits[f"deviation_{k}"]["slope"] <= 0.43
        assert fits[f"expansion_residual_{k}"]["slope"] == pytest.approx(2.0 / 3.0, abs=0.1)
        assert fits[f"proximity_{k}"]["slope"] == pytest.approx(1.0 / 3.0, abs=0.1)
        decay = [row[f"decay_{k}"] for row in result["rows"]]
        assert max(decay) < 100.0
        assert max(decay) / min(decay) < 10.0
    for row in result["rows"]:
        assert row["norm_1"] == pytest.approx(1.0, abs=1e-6)


@pytest.mark.slow
def test_corollary_sweep_converges(shooting):
    result = corollary_sweep(QUARTER, [1e4, 1e5, 1e6, 1e7], n=2, solver=shooting)
    rows = result["rows"]
    assert all(row["integral_I"] < 0 for row in rows)
    deviations = [abs(row["deviation"]) for row in rows]
    assert deviations[-1] == min(deviations)
    assert result["fits"]["deviation"]["slope"] == pytest.approx(1.0 / 3.0, abs=0.1)


@pytest.mark.slow
@pytest.mark.parametrize("n", [3, 4])
def test_expansion_residual_rate_in_higher_dimension(shooting, n):
    result = rescale_sweep(QUARTER, [1e4, 1e5, 1e6, 1e7], n=n, K=2, solver=shooting)
    for k in (1, 2):
        assert result["fits"][f"expansion_residual_{k}"]["slope"] == pytest.approx(2.0 / 3.0, abs=0.1)


def _double_mu(task):
    return 2.0 * task[1]


def test_sweep_progress_is_recorded():
    rows = _ordered_map(_double_mu, [(None, 1e4), (None, 1e6)], 1, "rescale-sweep")
    assert rows == [2e4, 2e6]
    status = run_status.get_run_status()
    assert status["command"] == "rescale-sweep" and status["done"] == 2 and not status["running"]
    assert [item["item"] for item in status["items"]] == ["mu=10000", "mu=1e+06"]
    assert status["outcome"] == "rescale-sweep: 2 rows"


def test_pipeline_sweeps_use_injected_config(lab_cfg, shooting, monkeypatch):
    cfg = copy.deepcopy(lab_cfg)
    cfg["rescale"].update({"x_cap": 15.0, "grid_step": 1.0 / 64.0, "phi_grid_points": 2048})

    def shipped_config():
        raise AssertionError("shipped config consulted")

    monkeypatch.setattr(asymptotics, "default_lab_config", shipped_config)
    monkeypatch.setattr(gap_model, "default_lab_config", shipped_config)
    service = PipelineService(cfg, solver=shooting)
    rows = service.rescale_sweep(RescaleSweepParams(mu=(1e4,), K=1))["rows"]
    assert rows[0]["x_end"] == pytest.approx(15.0)
    rows = service.corollary_sweep(CorollarySweepParams(mu=(1e4,)))["rows"]
    assert rows[0]["integral_I"] < 0
