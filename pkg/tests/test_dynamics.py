import numpy as np
import pytest

from ellax.cmsystems import CouplingData, PhaseState, lax_matrix, random_state, total_momentum
from ellax.dynamics import (ClosedFormHamiltonian, FunctionHamiltonian, ResidueHamiltonian,
                            char_poly_coefficients, cm_lax, flow_map, gradient_fd, hamilton_vector_field,
                            holomorphy_scan, integrate, poisson_bracket, spectral_invariants)
from ellax.errors import CollisionDetected, StencilHitsPole, StepRejected


def gl_state(lat, n=3, seed=1):
    return random_state("gl", n, lat, np.random.default_rng(seed), min_sep=0.2, p_scale=0.5)


def test_fd_gradient_matches_analytic(big_lat):
    s = gl_state(big_lat)
    H = ClosedFormHamiltonian(CouplingData("gl", 3))
    dq, dp = H.gradient(s)
    fq, fp = gradient_fd(H, s, 1e-3, richardson=True)
    assert np.allclose(fq, dq, rtol=1e-8) and np.allclose(fp, dp, rtol=1e-8)


def test_residue_hamiltonian_gradient(lat):
    s = random_state("so", 2, lat, np.random.default_rng(3), min_sep=0.15)
    c = CouplingData("so", 2)
    H, R = ClosedFormHamiltonian(c), ResidueHamiltonian(c, 1)
    assert abs(H(s) - R(s)) < 1e-10 * abs(H(s))
    dq, _ = H.gradient(s)
    rq, _ = gradient_fd(R, s, 1e-3, "so", richardson=True)
    assert np.allclose(rq, dq, rtol=1e-6)


def test_free_particle():
    H = FunctionHamiltonian(lambda s: 0.5 * complex(np.sum(s.p ** 2)), "free")
    from ellax.elliptic import lattice_from_periods
    lat = lattice_from_periods(1.5, 0.45 + 1.8j)
    s0 = PhaseState([0.1, 0.7], [0.2, -0.1], lat)
    s1 = flow_map(s0, H, 1.0, 0.1, mode="fd")
    assert np.allclose(s1.q, s0.q + s0.p, atol=1e-9) and np.allclose(s1.p, s0.p)


def test_rk4_convergence_order(big_lat):
    s0 = gl_state(big_lat)
    H = ClosedFormHamiltonian(CouplingData("gl", 3))
    a, b, c = (flow_map(s0, H, 0.4, dt).vector() for dt in (0.04, 0.02, 0.01))
    ratio = np.linalg.norm(a - b) / np.linalg.norm(b - c)
    assert 13 < ratio < 19


def test_time_reversal(big_lat):
    s0 = gl_state(big_lat)
    H = ClosedFormHamiltonian(CouplingData("gl", 3))
    back = flow_map(flow_map(s0, H, 0.3, 1e-3), H, -0.3, 1e-3)
    assert np.allclose(back.vector(), s0.vector(), atol=1e-10)


def test_orientation_flips_flow(big_lat):
    s = gl_state(big_lat)
    H = ClosedFormHamiltonian(CouplingData("gl", 3))
    qd, pd = hamilton_vector_field(H, s)
    qm, pm = hamilton_vector_field(H, s, orientation=-1)
    assert np.allclose(qd, -qm) and np.allclose(pd, -pm)
    # H = -p^2/2 + V, so q' = -p under the positive orientation
    assert np.allclose(qd, -s.p)
    assert abs(np.sum(pd)) < 1e-10 * np.max(np.abs(pd))


def test_energy_and_momentum_conserved(big_lat):
    s0 = gl_state(big_lat)
    c = CouplingData("gl", 3)
    H = ClosedFormHamiltonian(c)
    tr = integrate(s0, H, 0.5, 1e-3, monitors={"P": lambda s: total_momentum(s)}, record_every=50)
    assert tr.drift("H") < 1e-10 * abs(H(s0)) and tr.drift("P") < 1e-12
    assert len(tr) == 11
    inv = spectral_invariants(cm_lax(c), tr, [0.3 + 0.2j, -0.4 + 0.5j])
    assert inv["max_drift"] < 1e-9


def test_poisson_brackets(big_lat):
    s = gl_state(big_lat)
    c = CouplingData("gl", 3)
    P = FunctionHamiltonian(lambda s: total_momentum(s), "P")
    H = ClosedFormHamiltonian(c)
    b, scale = poisson_bracket(P, H, s, h=1e-3)
    assert abs(b) < 1e-9 * scale
    Q = FunctionHamiltonian(lambda s: complex(s.q[0]), "q0")
    b, _ = poisson_bracket(Q, FunctionHamiltonian(lambda s: complex(s.p[0]), "p0"), s, h=1e-3)
    assert abs(b - 1) < 1e-10


def test_char_poly_against_numpy(rng):
    for p in (1, 2, 5):
        L = rng.standard_normal((p, p)) + 1j * rng.standard_normal((p, p))
        assert np.allclose(char_poly_coefficients(L), np.poly(L)[1:], rtol=1e-10, atol=1e-10)
        assert abs(char_poly_coefficients(L)[-1] - (-1) ** p * np.linalg.det(L)) < 1e-10 * max(1, abs(np.linalg.det(L)))


def test_char_poly_trace_coefficient(lat):
    s = gl_state(lat)
    L = lax_matrix(s, CouplingData("gl", 3), 0.2 + 0.1j)
    assert abs(char_poly_coefficients(L)[0] + np.sum(s.p)) < 1e-12


def test_collision_and_rejection(big_lat):
    # separation 1e-2 is about 3e-3 of the shortest period
    s0 = PhaseState([0.1, 0.1 + 1e-2], [1.0, -1.0], big_lat)
    H = ClosedFormHamiltonian(CouplingData("gl", 2))
    with pytest.raises(CollisionDetected):
        integrate(s0, H, 1e-3, 1e-5, collision_tol=1e-2)
    bad = FunctionHamiltonian(lambda s: complex(np.sum(s.p ** 2)), "bad",
                              grad=lambda s: (np.full(s.n, np.nan), s.p))
    with pytest.raises(StepRejected):
        integrate(gl_state(big_lat), bad, 0.01, 1e-3)
    with pytest.raises(ValueError):
        integrate(s0, H, 0.0105, 1e-3)
    with pytest.raises(StencilHitsPole):
        gradient_fd(H, PhaseState([0.1, 0.1 + 2e-3], [0, 0], big_lat), 2e-3)


def test_csv_output(big_lat, tmp_path):
    s0 = gl_state(big_lat, 2)
    tr = integrate(s0, ClosedFormHamiltonian(CouplingData("gl", 2)), 0.01, 1e-3, record_every=5)
    text = tr.to_csv(tmp_path / "t.csv")
    lines = text.splitlines()
    assert lines[0].split(",") == ["t", "q0_re", "q0_im", "q1_re", "q1_im", "p0_re", "p0_im",
                                   "p1_re", "p1_im", "H_re", "H_im"]
    assert len(lines) == 4 and (tmp_path / "t.csv").read_text() == text


def test_holomorphy_scan_at_positions(lat):
    s = gl_state(lat)
    rows = holomorphy_scan(cm_lax(CouplingData("gl", 3)), s, list(s.q))
    for r in rows:
        assert abs(r["ratio"] - 1) < 0.1 and r["max_entry"] > 50
