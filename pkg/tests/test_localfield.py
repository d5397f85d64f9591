import numpy as np
import pytest
from hypothesis import given, strategies as st

from ellax import elliptic as ell
from ellax.errors import ContourHitsPole, NoisyJet
from ellax.localfield import MatrixField, expand_at, residue_at, scalar_field


def wp_field(lat):
    return scalar_field(lambda z: ell.wp(z, lat), [(0j, 2)], lat)


def test_wp_jet_at_origin(lat):
    jet = expand_at(wp_field(lat), 0j, -3, 4)
    assert abs(jet[-3]) < 1e-12
    assert abs(jet[-2] - 1) < 1e-12
    assert abs(jet[-1]) < 1e-12 and abs(jet[0]) < 1e-12
    assert abs(jet[2] - lat.g2 / 20) < 1e-9 * abs(lat.g2)
    assert abs(jet[4] - lat.g3 / 28) < 1e-8 * abs(lat.g3)
    assert jet.residual < 1e-12


def test_zeta_residue_and_lattice_translate(lat):
    f = scalar_field(lambda z: ell.zeta(z, lat), [(0j, 1)], lat)
    assert abs(residue_at(f, 0j) - 1) < 1e-12
    w = 2 * lat.omega1 + 2 * lat.omega3
    assert abs(residue_at(f, w) - 1) < 1e-12


def test_regular_point_taylor(lat):
    z0 = 0.2 + 0.1j
    jet = expand_at(wp_field(lat), z0, 0, 10)
    assert abs(jet[0] - ell.wp(z0, lat)) < 1e-11 * abs(jet[0])
    assert abs(jet[1] - ell.wp_prime(z0, lat)) < 1e-10 * abs(jet[1])
    assert abs(jet[2] - ell.wp_derivative(z0, lat, 2) / 2) < 1e-9 * abs(jet[2])
    assert abs(jet.evaluate(z0 + 1e-2) - ell.wp(z0 + 1e-2, lat)) < 1e-10 * abs(jet[0])


def test_matrix_field_jet(lat):
    q = 0.17 + 0.05j

    def ev(z):
        z = np.atleast_1d(z)
        out = np.zeros((z.size, 2, 2), dtype=complex)
        out[:, 0, 1] = ell.zeta(z - q, lat) - ell.zeta(z, lat)
        out[:, 1, 0] = 3.0
        return out
    f = MatrixField(ev, 2, [(0j, 1), (q, 1)], None, lat, vectorized=True)
    r = residue_at(f, q)
    assert np.allclose(r, [[0, 1], [0, 0]], atol=1e-12)


def test_pole_inside_contour_raises(lat):
    f = scalar_field(lambda z: ell.zeta(z - 0.05, lat) - ell.zeta(z, lat), [(0j, 1), (0.05, 1)], lat)
    with pytest.raises(ContourHitsPole):
        expand_at(f, 0j, -1, 0, radius=0.1)


def test_noisy_jet_from_undeclared_pole(lat):
    # pole at 0.05 not declared, so the default radius encloses it and aliasing shows up
    f = scalar_field(lambda z: 1 / (z - 0.05) ** 3, [(0j, 1)], lat)
    with pytest.raises(NoisyJet):
        expand_at(f, 0j, -1, 0, radius=0.06, samples=16)


def test_samples_validation(lat):
    with pytest.raises(ValueError):
        expand_at(wp_field(lat), 0j, -2, 2, samples=100)
    with pytest.raises(ValueError):
        expand_at(wp_field(lat), 0j, -2, 2, samples=8)
    with pytest.raises(ValueError):
        expand_at(wp_field(lat), 0j, 2, -2)


@given(st.lists(st.complex_numbers(max_magnitude=5, allow_nan=False, allow_infinity=False),
                min_size=1, max_size=8),
       st.integers(-4, 0))
def test_laurent_polynomial_round_trip(coeffs, lo):
    c = np.array(coeffs)
    ks = np.arange(lo, lo + c.size)
    f = MatrixField(lambda z: np.sum(c * np.asarray(z)[..., None] ** ks, axis=-1), vectorized=True)
    jet = expand_at(f, 0j, lo, lo + c.size - 1, radius=0.5, samples=64)
    assert np.allclose(jet.coeffs, c, atol=1e-12 * max(1.0, np.max(np.abs(c))) * 2.0 ** abs(lo))
