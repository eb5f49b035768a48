import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from cylscat.channels import BlockScatteringMatrix, assemble, free_blocks
from cylscat.errors import NonUnitaryInput, NotHourglass
from cylscat.geometry import ModelSpec, bulge, cylinder, hourglass, open_channels
from cylscat.spectral import (
    WEYL_LIMIT, block_eigenvalues, cdf_deviation, dichotomy_report, eigenphases, equidist_sweep, fixed_point_scan,
    functional_target, histogram, histogram_script, trace_functional, trace_power_direct, trend_script, weyl_count,
)

TWO_PI = 2 * math.pi


def test_free_eigenphases_are_antipodal():
    spec = cylinder(h=0.1)
    SU = assemble(spec)[1]
    ps = eigenphases(SU)
    phi = np.mod(2 * spec.section * SU.tau / spec.h, TWO_PI)
    expected = np.sort(np.stack((phi, np.mod(phi + math.pi, TWO_PI)), axis=1), axis=1)
    diff = np.abs((ps.phases - expected + math.pi) % TWO_PI - math.pi)
    assert diff.max() <= 1e-8


def test_identity_has_zero_phases():
    ch = open_channels(ModelSpec(h=0.2))
    blocks = np.tile(np.eye(2, dtype=complex), (ch.n_modes, 1, 1))
    ps = eigenphases(BlockScatteringMatrix(0.2, ch, blocks))
    assert np.all(ps.phases == 0)


def test_bulge_h035_phases():
    ps = eigenphases(assemble(bulge(h=0.35))[1])
    assert ps.count == 10
    assert ps.modulus_defect <= 1e-8


def test_non_unitary_input_rejected():
    ch = open_channels(ModelSpec(h=0.2))
    blocks = np.tile(1.1 * np.eye(2, dtype=complex), (ch.n_modes, 1, 1))
    with pytest.raises(NonUnitaryInput):
        eigenphases(BlockScatteringMatrix(0.2, ch, blocks))


@given(arrays(np.float64, (3, 2, 2, 2), elements=st.floats(-2, 2)))
def test_block_eigenvalues_match_numpy(x):
    B = x[..., 0] + 1j * x[..., 1]
    got = np.sort_complex(block_eigenvalues(B).ravel())
    want = np.sort_complex(np.linalg.eigvals(B).ravel())
    # eigenvalues of defective blocks are ill-conditioned; compare characteristic data instead
    assert np.allclose(np.sum(got), np.sum(want), atol=1e-9)
    assert np.allclose(np.prod(block_eigenvalues(B), axis=1), np.linalg.det(B), atol=1e-9)
    lam = block_eigenvalues(B)
    tr = np.trace(B, axis1=1, axis2=2)[:, None]
    det = np.linalg.det(B)[:, None]
    assert np.all(np.abs(lam * lam - tr * lam + det) <= 1e-9 * (1 + np.abs(tr) ** 2 + np.abs(det)))


@pytest.mark.parametrize("h", [0.1, 0.05, 0.02])
def test_trace_functionals(h):
    SU = assemble(bulge(h=h))[1]
    ps = eigenphases(SU)
    assert trace_functional(ps, {0: 1.0}) == ps.count == SU.dim
    for k in range(1, 5):
        assert abs(ps.power_sum(k) - trace_power_direct(SU, k)) <= 1e-8
    f = {0: 0.5, 1: 0.25, -2: 1j}
    direct = 0.5 * SU.dim + 0.25 * trace_power_direct(SU, 1) + 1j * np.conj(trace_power_direct(SU, 2))
    assert abs(trace_functional(ps, f) - direct) <= 1e-8
    assert functional_target(f) == 2.0


def test_degree_limit():
    ps = eigenphases(assemble(bulge(h=0.2))[1])
    with pytest.raises(ValueError):
        trace_functional(ps, {9: 1.0})


@pytest.mark.parametrize("h", [0.35, 0.1, 0.02, 0.01])
def test_free_trace_vanishes(h):
    SU = assemble(cylinder(h=h))[1]
    assert abs(eigenphases(SU).power_sum(1)) <= 1e-10


def test_bulge_first_trace_small_and_smaller_than_coarse():
    vals = {h: abs(h * eigenphases(assemble(bulge(h=h))[1]).power_sum(1)) for h in (0.04, 0.01)}
    assert vals[0.01] <= 0.3
    assert vals[0.01] < vals[0.04]


@pytest.mark.parametrize("h,dim", [(0.1, 38), (0.01, 398), (2.0, 2)])
def test_weyl_counts(h, dim):
    w = weyl_count(h)
    assert w.dim == dim
    assert w.scaled == pytest.approx(h * dim)
    assert w.ratio == pytest.approx(h * dim / WEYL_LIMIT)


@given(arrays(np.float64, st.integers(1, 200), elements=st.floats(0, TWO_PI, exclude_max=True)))
def test_cdf_deviation_bounds(x):
    d = cdf_deviation(x)
    assert 1 / (2 * len(x)) - 1e-12 <= d <= 1.0
    counts, _ = histogram(x, 16)
    assert counts.sum() == len(x)


def test_cdf_deviation_of_uniform_lattice():
    n = 1000
    assert cdf_deviation(TWO_PI * (np.arange(n) + 0.5) / n) == pytest.approx(0.5 / n)


def test_equidist_sweep_report():
    rep = equidist_sweep(bulge(), [0.04, 0.02])
    for p in rep.points:
        assert p.traces["e0"] == pytest.approx(p.h * p.dim)
        assert p.dim == open_channels(ModelSpec(h=p.h)).dim
        assert p.counts.sum() == p.dim
    rows = list(rep.rows())
    assert len(rows) == 2 * 5
    assert list(rows[0]) == ["h", "dim", "f_id", "re_trace_scaled", "im_trace_scaled", "target_re", "target_im",
                             "cdf_dev"]


def test_hourglass_needs_flag():
    with pytest.raises(ValueError):
        equidist_sweep(hourglass(), [0.05])
    rep = equidist_sweep(hourglass(), [0.05], allow_unverified=True)
    assert rep.caveat


def test_fixed_points_isolated_for_bulge():
    for power in (1, 2, 3):
        scan = fixed_point_scan(bulge(), power)
        assert scan.isolated and scan.counts[0] > 0


def test_dichotomy_report():
    rep = dichotomy_report(hourglass(h=0.02))
    assert rep.eta_c == pytest.approx(0.64)
    assert rep.passed
    assert rep.band("transmit") and rep.band("reflect") and rep.band("tunnel")
    assert all(r.passed is None for r in rep.band("tunnel"))
    with pytest.raises(NotHourglass):
        dichotomy_report(bulge())


def test_plot_scripts():
    assert "with boxes" in histogram_script("hist.dat")
    assert "logscale" in trend_script("trend.dat")
