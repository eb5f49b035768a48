from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from cylscat.errors import NonConvergedPowerIteration
from cylscat.geometry import ProfileFunction, ModelSpec, bulge, hourglass
from cylscat.resolvent import WeightedResolventProblem, resolvent_sweep, sup_over_tau, weighted_resolvent_norm


@pytest.fixture(scope="module")
def prob():
    return WeightedResolventProblem(bulge())


def test_problem_invariants(prob):
    s = prob.grid(0.1)
    w = prob.weight(s)
    assert np.all(w > 0)
    assert np.all(np.diff(w[s >= 0]) < 0)
    phi = prob.phi(s)
    assert np.all((phi > 0) & (phi <= 1))
    assert len(prob.taus) >= 21 and prob.taus[-1] == pytest.approx(0.9)
    assert np.all(prob.absorber(s[np.abs(s) < prob.L_res - prob.layer]) == 0)


def test_validation(prob):
    with pytest.raises(ValueError):
        weighted_resolvent_norm(prob, 0.95, 0.1)
    with pytest.raises(ValueError):
        WeightedResolventProblem(bulge(), eps=0.0)


def free_weighted_norm(prob, h, n=1500):
    """Independent oracle: the kernel w(s) i e^{i|s-s'|/h} / (2h) w(s') by quadrature on a coarse grid."""
    s = np.linspace(-prob.L_res + prob.layer, prob.L_res - prob.layer, n)
    ds = s[1] - s[0]
    w = prob.weight(s)
    K = w[:, None] * (1j / (2 * h)) * np.exp(1j * np.abs(s[:, None] - s[None, :]) / h) * w[None, :] * ds
    return np.linalg.norm(K, 2)


def test_free_resolvent_scaling(prob):
    a, b = (weighted_resolvent_norm(prob, 0.0, h).norm for h in (0.1, 0.05))
    assert 1.6 <= b / a <= 2.4
    # the tau = 0 operator is the free resolvent; compare with the kernel oracle
    assert a == pytest.approx(free_weighted_norm(prob, 0.1, 3000), rel=0.03)


def test_bulge_ratio_mid_tau(prob):
    a = weighted_resolvent_norm(prob, 0.5, 0.05).norm
    b = weighted_resolvent_norm(prob, 0.5, 0.025).norm
    assert np.isfinite(a) and 1.5 <= b / a <= 2.5


def test_smaller_eps_grows_but_ratio_bounded():
    vals = {}
    for eps in (0.1, 0.05, 0.02):
        p = WeightedResolventProblem(bulge(), eps=eps)
        vals[eps] = [weighted_resolvent_norm(p, 1 - eps, h).norm for h in (0.1, 0.05)]
    assert vals[0.02][0] > vals[0.05][0] > vals[0.1][0]
    for v in vals.values():
        assert v[1] / v[0] < 2.5


def test_sup_monotone_in_eps_and_tau_refinement():
    base = WeightedResolventProblem(bulge())
    s21 = sup_over_tau(base, 0.1, check_absorber=False).value
    s41 = sup_over_tau(replace(base, n_tau=41), 0.1, check_absorber=False).value
    assert abs(s41 / s21 - 1) <= 0.05
    s_small = sup_over_tau(replace(base, eps=0.05), 0.1, check_absorber=False).value
    assert s_small >= s21


def test_absorber_and_grid_robustness(prob):
    est = sup_over_tau(prob, 0.1)
    assert not est.absorber_sensitive
    fine = replace(prob, points_per_h=40)
    for tau in (0.0, 0.9):
        a = weighted_resolvent_norm(prob, tau, 0.1).norm
        b = weighted_resolvent_norm(fine, tau, 0.1).norm
        assert abs(a / b - 1) <= 0.02


def test_mirror_symmetry():
    # the preset profiles and the weight are even, and the grid is symmetric about 0
    prob = WeightedResolventProblem(bulge())
    s = prob.grid(0.1)
    assert np.allclose(prob.phi(s), prob.phi(-s), rtol=1e-12, atol=0)
    assert np.allclose(prob.weight(s), prob.weight(s[::-1]), rtol=1e-12, atol=0)


def test_nonconvergence_reported(prob):
    with pytest.raises(NonConvergedPowerIteration):
        weighted_resolvent_norm(prob, 0.5, 0.1, tol=1e-15, max_iter=3)


def test_hourglass_runs():
    p = WeightedResolventProblem(hourglass(), n_tau=5)
    est = sup_over_tau(p, 0.1, check_absorber=False)
    assert np.isfinite(est.value) and est.value > 0


def test_sweep_rows_and_slope(prob):
    sw = resolvent_sweep(replace(prob, n_tau=5), [0.1, 0.05], check_absorber=False)
    rows = list(sw.rows(replace(prob, n_tau=5)))
    assert len(rows) == 10 and list(rows[0]) == ["tau", "h", "norm", "absorber_check_ratio"]
    assert -1.3 <= sw.slope() <= -0.7
