import numpy as np
import pytest

from ellax.cmsystems import CouplingData, lax_field, random_state, tyurin_from_lax
from ellax.hierarchy import (DEFAULT_P0, HierarchyIndex, construct_ma, involution_check,
                             m_constraint_report, power_field, verify_lax_flow, verify_tyurin_dynamics,
                             zero_curvature_static)
from ellax.localfield import expand_at


@pytest.fixture
def gl2(lat):
    s = random_state("gl", 2, lat, np.random.default_rng(0), min_sep=0.15)
    c = CouplingData("gl", 2)
    return s, c, lax_field(s, c), tyurin_from_lax(s, c)


def test_index_validation():
    with pytest.raises(ValueError):
        HierarchyIndex(0j, 0, 1)
    with pytest.raises(ValueError):
        HierarchyIndex(0j, 1, -1, m_P=1)
    with pytest.raises(ValueError):
        HierarchyIndex(0j, 2, 1, kind_tag="sp")
    HierarchyIndex(0j, 2, 1, kind_tag="gl")
    HierarchyIndex(0j, 1, 0, m_P=1)


def test_ma_is_unique_and_normalized(gl2):
    s, c, Lf, T = gl2
    ma = construct_ma(Lf, HierarchyIndex(0j, 1, 1), T)
    assert ma.nullity == 0 and ma.depth == 2
    assert ma.n_conditions == ma.space_dimension == 12
    assert ma.residual < 1e-10 and ma.radius_check < 1e-8
    assert np.max(np.abs(ma.field(DEFAULT_P0))) < 1e-10


def test_ma_principal_part_matches(gl2):
    s, c, Lf, T = gl2
    a = HierarchyIndex(0j, 2, 1)
    ma = construct_ma(Lf, a, T)
    lo = -ma.depth
    jm = expand_at(ma.field, 0j, lo, -1)
    jt = expand_at(power_field(Lf, a.k, a.m, a.P), 0j, lo, -1)
    assert np.max(np.abs(jm.coeffs - jt.coeffs)) < 1e-8 * np.max(np.abs(jt.coeffs))


def test_regular_point_index(gl2):
    # at a regular point of L the target (z - P)^(-1) L has residue L(P)
    s, c, Lf, T = gl2
    P = 0.31 - 0.12j
    ma = construct_ma(Lf, HierarchyIndex(P, 1, 1), T)
    assert ma.depth == 1
    r = expand_at(ma.field, P, -1, -1).coeff(-1)
    assert np.allclose(r, Lf(P), rtol=1e-8, atol=1e-10)


def test_m_constraints_of_ma(gl2):
    s, c, Lf, T = gl2
    rep = m_constraint_report(construct_ma(Lf, HierarchyIndex(0j, 1, 1), T), T)
    assert rep.passed, rep.max_residual


def test_lax_flow_second_order(gl2):
    s, c, _, _ = gl2
    rep = verify_lax_flow(s, c, HierarchyIndex(0j, 1, 1))
    assert rep.passed
    assert rep.deviations[-1] < 1e-6
    assert all(1.8 < o < 2.2 for o in rep.orders[:2])
    assert rep.gauge_residual < 1e-10
    # without the gauge constant the difference does not shrink with dt
    assert min(rep.literal_deviations) > 1e-3


def test_tyurin_dynamics(gl2):
    s, c, _, _ = gl2
    rep = verify_tyurin_dynamics(s, c, HierarchyIndex(0j, 1, 1))
    assert rep.passed and rep.deviation < 1e-6 and rep.alpha_residual < 1e-8


def test_zero_curvature_static(gl2):
    s, c, Lf, T = gl2
    ma = construct_ma(Lf, HierarchyIndex(0j, 1, 1), T)
    mb = construct_ma(Lf, HierarchyIndex(0j, 2, 1), T)
    zc = zero_curvature_static(ma, mb, T)
    assert zc["passed"] and zc["double_pole_cancellation"] < 1e-8


def test_involution(lat):
    s = random_state("gl", 3, lat, np.random.default_rng(4), min_sep=0.15)
    recs = involution_check(s, CouplingData("gl", 3), [HierarchyIndex(0j, k, 1) for k in (1, 2, 3)])
    assert len(recs) == 3 and max(r["relative"] for r in recs) < 1e-6


def test_non_gl_verification_raises(lat):
    s = random_state("so", 2, lat, np.random.default_rng(1))
    with pytest.raises(ValueError):
        verify_lax_flow(s, CouplingData("so", 2), HierarchyIndex(0j, 1, 1, kind_tag="so"))
