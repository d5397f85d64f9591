import numpy as np
import pytest
from hypothesis import given, strategies as st

from ellax import elliptic as ell
from ellax.cmsystems import (CouplingData, PhaseState, hamiltonian_closed_form, hamiltonian_gradient,
                             hamiltonian_via_residue, lax_field, lax_matrix, random_state,
                             total_momentum, tyurin_from_lax)
from ellax.dynamics import char_poly_coefficients
from ellax.errors import DegenerateConfiguration, PoleAtZ
from ellax.laxspace import check_l_constraints
from ellax.localfield import expand_at

Z = np.array([0.11 + 0.31j, -0.27 + 0.05j, 0.33 - 0.17j])


def state(kind, n, lat, seed=0, **kw):
    return random_state(kind, n, lat, np.random.default_rng(seed), min_sep=0.12, **kw)


def test_gl_two_body_product(lat):
    s = state("gl", 2, lat, 1)
    L = lax_matrix(s, CouplingData("gl", 2), Z)
    ref = ell.wp(s.q[0] - s.q[1], lat) - ell.wp(Z, lat)
    assert np.allclose(-L[:, 0, 1] * L[:, 1, 0], ref, rtol=1e-11)
    assert np.allclose(np.trace(L, axis1=1, axis2=2), np.sum(s.p), rtol=1e-13)


def test_gl_spectrum_is_elliptic(lat):
    s = state("gl", 3, lat, 2)
    c = CouplingData("gl", 3)
    for w in (2 * lat.omega1, 2 * lat.omega3):
        a = char_poly_coefficients(lax_matrix(s, c, Z[0]))
        b = char_poly_coefficients(lax_matrix(s, c, Z[0] + w))
        assert np.allclose(a, b, rtol=1e-10)


def test_so_block_structure(lat):
    s = state("so", 2, lat, 3)
    c = CouplingData("so", 2)
    L = lax_matrix(s, c, Z[1])
    n = 2
    B, C = L[:n, n:], L[n:, :n]
    assert np.allclose(np.diag(B), 0) and np.allclose(np.diag(C), 0)
    assert np.allclose(B, -B.T) and np.allclose(C, -C.T)
    assert c.algebra.membership_residual(L) < 1e-12


@pytest.mark.parametrize("eps", [1.0, 0.5 - 0.25j])
def test_sp_diagonal_product(lat, eps):
    s = state("sp", 2, lat, 4)
    c = CouplingData("sp", 2, epsilon=eps)
    L = lax_matrix(s, c, Z)
    inner = L[:, 1:-1, 1:-1]
    B, C = inner[:, :2, 2:], inner[:, 2:, :2]
    for i in range(2):
        ref = -eps * (ell.wp(2 * s.q[i], lat) - ell.wp(Z, lat))
        assert np.allclose(B[:, i, i] * C[:, i, i], ref, rtol=1e-10)
    assert np.allclose(L[:, 0, :], 0) and np.allclose(L[:, -1, :], 0)
    assert max(c.algebra.membership_residual(X) for X in L) < 1e-12


def test_sp_epsilon_zero_reduces_to_so_hamiltonian(lat):
    s = state("sp", 2, lat, 5)
    h_sp = hamiltonian_closed_form(s, CouplingData("sp", 2, epsilon=0.0))
    h_so = hamiltonian_closed_form(s, CouplingData("so", 2))
    assert abs(h_sp - h_so) < 1e-12 * abs(h_so)


@pytest.mark.parametrize("kind,n", [("gl", 3), ("so", 2), ("sp", 1), ("sp", 2), ("so", 3)])
def test_residue_matches_closed_form(lat, kind, n):
    s = state(kind, n, lat, 6)
    c = CouplingData(kind, n)
    h = hamiltonian_closed_form(s, c)
    r = hamiltonian_via_residue(lax_field(s, c), k=1, m=1, P=0j)
    assert abs(r - h) < 1e-10 * max(1.0, abs(h))


def test_first_residue_hamiltonian_is_minus_total_momentum(lat):
    s = state("gl", 3, lat, 7)
    r = hamiltonian_via_residue(lax_field(s, CouplingData("gl", 3)), k=0, m=1, P=0j)
    assert abs(r + total_momentum(s)) < 1e-12


def test_higher_residue_is_radius_independent(lat):
    s = state("gl", 3, lat, 8)
    f = lax_field(s, CouplingData("gl", 3))
    a = hamiltonian_via_residue(f, k=2, m=1, P=0j)
    b = hamiltonian_via_residue(f, k=2, m=1, P=0j, radius=0.03)
    assert abs(a - b) < 1e-10 * max(1.0, abs(a))


def test_gradient_matches_finite_differences(lat):
    for kind, n in [("gl", 3), ("so", 2), ("sp", 2)]:
        s = state(kind, n, lat, 9)
        c = CouplingData(kind, n)
        dq, dp = hamiltonian_gradient(s, c)
        h = 1e-5
        for i in range(n):
            e = np.zeros(n)
            e[i] = h
            fq = (hamiltonian_closed_form(s.replace(q=s.q + e), c)
                  - hamiltonian_closed_form(s.replace(q=s.q - e), c)) / (2 * h)
            fp = (hamiltonian_closed_form(s.replace(p=s.p + e), c)
                  - hamiltonian_closed_form(s.replace(p=s.p - e), c)) / (2 * h)
            assert abs(fq - dq[i]) < 1e-5 * max(1.0, abs(dq[i]))
            assert abs(fp - dp[i]) < 1e-8 * max(1.0, abs(dp[i]))


def test_gl_lax_matrix_satisfies_l_constraints(lat):
    s = state("gl", 3, lat, 10)
    c = CouplingData("gl", 3)
    f = lax_field(s, c)
    rep = check_l_constraints(f, tyurin_from_lax(s, c))
    assert rep.passed, rep.max_residual
    jet = expand_at(f, s.q[0], -2, 0)
    assert np.max(np.abs(jet[-2])) < 1e-10 and np.max(np.abs(jet[-1])) > 1e-3
    with pytest.raises(ValueError):
        tyurin_from_lax(state("so", 2, lat), CouplingData("so", 2))


def test_pole_at_z(lat):
    s = state("so", 2, lat, 11)
    c = CouplingData("so", 2)
    for z in (0j, s.q[0], -s.q[1], s.q[0] + 2 * lat.omega1):
        with pytest.raises(PoleAtZ):
            lax_matrix(s, c, z)


def test_coupling_validation():
    with pytest.raises(ValueError):
        CouplingData("gl", 2, f_gl=np.array([[1, 2], [2, 1]]))
    with pytest.raises(ValueError):
        CouplingData("so", 2, f_c=np.ones((2, 2)))
    with pytest.raises(ValueError):
        CouplingData("sp", 1, f_b=np.ones((1, 1)), f_c=np.ones((1, 1)))
    with pytest.raises(ValueError):
        CouplingData("xx", 2)
    f = np.array([[1, 2], [0.5, 1]])
    CouplingData("gl", 2, f_gl=f)


def test_state_validation(lat):
    with pytest.raises(ValueError):
        PhaseState([0.1, 0.2], [0.0], lat)
    s = PhaseState([0.1, 0.1 + 2 * lat.omega3], [0, 0], lat)
    with pytest.raises(DegenerateConfiguration):
        s.validate("gl")
    s = PhaseState([0.1, -0.1], [0, 0], lat)
    s.validate("gl")
    with pytest.raises(DegenerateConfiguration):
        s.validate("so")


@given(st.integers(0, 2 ** 31 - 1))
def test_serialization_round_trip(seed):
    lat = ell.lattice_from_periods(0.5, 0.15 + 0.6j)
    rng = np.random.default_rng(seed)
    s = random_state("sp", 2, lat, rng)
    s2 = PhaseState.from_dict(s.to_dict())
    assert np.array_equal(s2.q, s.q) and np.array_equal(s2.p, s.p)
    c = CouplingData("sp", 2, epsilon=complex(rng.standard_normal(), 0.3))
    c2 = CouplingData.from_dict(c.to_dict())
    assert np.array_equal(c2.f_c, c.f_c) and c2.epsilon == c.epsilon
