"""Canonical Hamiltonian flows, RK4 integration and spectral invariants.

Phase space is complex; ``q_i`` and ``p_i`` are canonical pairs and the
Hamiltonians are holomorphic, so complex derivatives come from central
differences along the real axis.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .cmsystems import (CouplingData, PhaseState, hamiltonian_closed_form, hamiltonian_gradient,
                        hamiltonian_via_residue, lax_field, lax_matrix)
from .errors import CollisionDetected, PoleAtZ, StencilHitsPole, StepRejected

COLLISION_TOL = 1e-3
FD_STEP = 1e-5


# ---------------------------------------------------------------------------
# Hamiltonian evaluators


class Hamiltonian:
    """A function on phase space, optionally with an analytic gradient."""

    name = "H"
    kind = "gl"

    def __call__(self, s: PhaseState) -> complex:
        raise NotImplementedError

    def gradient(self, s: PhaseState):
        """``(dH/dq, dH/dp)``; the default uses central differences."""
        return gradient_fd(self, s, FD_STEP, self.kind)


class ClosedFormHamiltonian(Hamiltonian):
    """The second-order Calogero-Moser Hamiltonian with its analytic gradient."""

    def __init__(self, coupling: CouplingData):
        self.coupling = coupling
        self.kind = coupling.kind
        self.name = f"H_closed_{coupling.kind}"

    def __call__(self, s):
        return hamiltonian_closed_form(s, self.coupling)

    def gradient(self, s):
        return hamiltonian_gradient(s, self.coupling)


class ResidueHamiltonian(Hamiltonian):
    """``H_(P,k,m) = -1/(k+1) res_P tr((z-P)^(-m) L^(k+1))`` for the CM Lax matrix."""

    def __init__(self, coupling: CouplingData, k: int, m: int = 1, P: complex = 0j, samples: int = 256):
        self.coupling = coupling
        self.kind = coupling.kind
        self.k, self.m, self.P = int(k), int(m), complex(P)
        self.samples = samples
        self.name = f"H_({self.P.real:g}{self.P.imag:+g}j,{self.k},{self.m})"

    def __call__(self, s):
        return hamiltonian_via_residue(lax_field(s, self.coupling), self.k, self.m, self.P,
                                       samples=self.samples)


class FunctionHamiltonian(Hamiltonian):
    """Wrap a plain callable ``s -> complex``."""

    def __init__(self, fn: Callable, name: str = "H", kind: str = "gl", grad: Callable | None = None):
        self.fn, self.name, self.kind, self._grad = fn, name, kind, grad

    def __call__(self, s):
        return complex(self.fn(s))

    def gradient(self, s):
        if self._grad is not None:
            return self._grad(s)
        return super().gradient(s)


def _shift(s: PhaseState, which: str, i: int, h: float) -> PhaseState:
    q, p = s.q.copy(), s.p.copy()
    (q if which == "q" else p)[i] += h
    return PhaseState(q, p, s.lattice)


def gradient_fd(H, s: PhaseState, h: float = FD_STEP, kind: str = "gl", richardson: bool = False):
    """Central-difference gradient ``(dH/dq, dH/dp)``.

    With ``richardson=True`` the steps ``h`` and ``h/2`` are combined to
    cancel the ``h^2`` error term.

    Raises
    ------
    StencilHitsPole
        If a stencil point violates the state invariants.
    """
    def d(which, i, step):
        sp, sm = _shift(s, which, i, step), _shift(s, which, i, -step)
        if which == "q":
            for t in (sp, sm):
                if t.min_separation(kind) < COLLISION_TOL:
                    raise StencilHitsPole(f"stencil point q_{i}{'+' if t is sp else '-'}h collides")
        try:
            return (H(sp) - H(sm)) / (2 * step)
        except PoleAtZ as e:  # pragma: no cover - guarded by the separation check
            raise StencilHitsPole(str(e)) from e

    def one(which, i):
        if not richardson:
            return d(which, i, h)
        return (4 * d(which, i, h / 2) - d(which, i, h)) / 3

    dq = np.array([one("q", i) for i in range(s.n)], dtype=complex)
    dp = np.array([one("p", i) for i in range(s.n)], dtype=complex)
    return dq, dp


def hamilton_vector_field(H, s: PhaseState, mode: str = "analytic", orientation: int = 1,
                          h: float = FD_STEP):
    """``(q_dot, p_dot) = orientation * (dH/dp, -dH/dq)``.

    ``mode='analytic'`` uses ``H.gradient`` (analytic for the closed form);
    ``'fd'`` forces central differences.  ``orientation=-1`` is the flow of
    ``-H``.
    """
    if mode == "analytic":
        dq, dp = H.gradient(s)
    elif mode in ("fd", "finite-difference"):
        dq, dp = gradient_fd(H, s, h, getattr(H, "kind", "gl"))
    else:
        raise ValueError(f"unknown mode {mode!r}")
    return orientation * dp, -orientation * dq


def poisson_bracket(Ha, Hb, s: PhaseState, h: float = 1e-4, richardson: bool = True,
                    kind: str = "gl"):
    """Canonical bracket ``sum_i (dHa/dq_i dHb/dp_i - dHa/dp_i dHb/dq_i)``.

    Returns ``(bracket, scale)`` where ``scale`` is the sum of the absolute
    values of the products, the natural size against which the bracket is small.
    """
    aq, ap = gradient_fd(Ha, s, h, kind, richardson)
    bq, bp = gradient_fd(Hb, s, h, kind, richardson)
    terms = np.concatenate([aq * bp, -ap * bq])
    return complex(np.sum(terms)), float(np.sum(np.abs(terms)))


# ---------------------------------------------------------------------------
# integration


@dataclass
class Trajectory:
    times: list
    states: list
    method: str
    dt: float
    monitors: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.times)

    @property
    def final(self) -> PhaseState:
        return self.states[-1]

    def drift(self, name: str) -> float:
        v = np.asarray(self.monitors[name])
        return float(np.max(np.abs(v - v[0]), axis=0).max())

    def to_csv(self, path=None) -> str:
        """CSV with ``t``, Re/Im of every ``q_i`` and ``p_i`` and each monitor column."""
        n = self.states[0].n
        head = ["t"]
        for name in ("q", "p"):
            for i in range(n):
                head += [f"{name}{i}_re", f"{name}{i}_im"]
        mon_cols = []
        for key, vals in self.monitors.items():
            arr = np.asarray(vals)
            if arr.ndim == 1:
                mon_cols.append((key, None))
            else:
                for j in range(arr.shape[1]):
                    mon_cols.append((key, j))
        for key, j in mon_cols:
            suffix = "" if j is None else f"_{j}"
            head += [f"{key}{suffix}_re", f"{key}{suffix}_im"]
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(head)
        for r, (t, s) in enumerate(zip(self.times, self.states)):
            row = [repr(float(t))]
            for x in np.concatenate([s.q, s.p]):
                row += [repr(float(x.real)), repr(float(x.imag))]
            for key, j in mon_cols:
                v = complex(self.monitors[key][r] if j is None else self.monitors[key][r][j])
                row += [repr(v.real), repr(v.imag)]
            w.writerow(row)
        text = buf.getvalue()
        if path is not None:
            with open(path, "w", newline="") as fh:
                fh.write(text)
        return text


def _vf(H, orientation, mode):
    def f(s):
        qd, pd = hamilton_vector_field(H, s, mode, orientation)
        return np.concatenate([qd, pd])
    return f


def rk4_step(f, s: PhaseState, dt: float) -> PhaseState:
    y = s.vector()
    lat = s.lattice
    k1 = f(s)
    k2 = f(PhaseState.from_vector(y + 0.5 * dt * k1, lat))
    k3 = f(PhaseState.from_vector(y + 0.5 * dt * k2, lat))
    k4 = f(PhaseState.from_vector(y + dt * k3, lat))
    return PhaseState.from_vector(y + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4), lat)


def integrate(s0: PhaseState, H, T: float, dt: float, method: str = "rk4", orientation: int = 1,
              mode: str = "analytic", monitors: dict | None = None, kind: str | None = None,
              collision_tol: float = COLLISION_TOL, record_every: int = 1) -> Trajectory:
    """Integrate the Hamiltonian flow of ``H`` for time ``T``.

    Parameters
    ----------
    monitors : dict, optional
        ``name -> callable(state)`` evaluated at every recorded step.  ``H``
        itself is always recorded under ``'H'``.
    record_every : int
        Record every this many steps (the final state is always recorded).

    Raises
    ------
    CollisionDetected
        When positions approach a collision within ``collision_tol`` periods.
    StepRejected
        When a step produces non-finite values.
    """
    if method != "rk4":
        raise ValueError("only 'rk4' is implemented")
    if dt <= 0:
        raise ValueError("dt must be positive")
    kind = kind or getattr(H, "kind", "gl")
    mons = {"H": H}
    mons.update(monitors or {})
    nsteps = int(round(T / dt))
    if nsteps < 1 or abs(nsteps * dt - T) > 1e-9 * max(1.0, abs(T)):
        raise ValueError("T must be a positive multiple of dt")
    f = _vf(H, orientation, mode)
    traj = Trajectory([0.0], [s0], method, dt, {k: [m(s0)] for k, m in mons.items()})
    s = s0
    for i in range(1, nsteps + 1):
        s = rk4_step(f, s, dt)
        if not np.all(np.isfinite(s.vector())):
            raise StepRejected(f"non-finite state at step {i}")
        if s.min_separation(kind) < collision_tol:
            raise CollisionDetected(f"collision at t = {i * dt:.6g}")
        if i % record_every == 0 or i == nsteps:
            traj.times.append(i * dt)
            traj.states.append(s)
            for k, m in mons.items():
                traj.monitors[k].append(m(s))
    return traj


def flow_map(s0: PhaseState, H, t: float, dt: float, orientation: int = 1, mode: str = "analytic"):
    """State after time ``t`` (may be negative) with RK4 steps of size at most ``dt``."""
    steps = max(1, int(np.ceil(abs(t) / dt - 1e-12)))
    h = t / steps
    f = _vf(H, orientation, mode)
    s = s0
    for _ in range(steps):
        s = rk4_step(f, s, h)
    return s


# ---------------------------------------------------------------------------
# spectral invariants


def char_poly_coefficients(L: np.ndarray) -> np.ndarray:
    """Coefficients ``c_1..c_p`` of ``det(k - L) = k^p + c_1 k^(p-1) + ... + c_p``.

    Computed from power traces ``s_j = tr L^j`` by Newton's identities
    ``j c_j = -(s_j + c_1 s_(j-1) + ... + c_(j-1) s_1)``.
    """
    L = np.asarray(L, dtype=complex)
    p = L.shape[-1]
    s = np.zeros(p + 1, dtype=complex)
    Lk = np.eye(p, dtype=complex)
    for j in range(1, p + 1):
        Lk = Lk @ L
        s[j] = np.trace(Lk)
    c = np.zeros(p + 1, dtype=complex)
    c[0] = 1
    for j in range(1, p + 1):
        c[j] = -(s[j] + np.dot(c[1:j], s[j - 1:0:-1])) / j
    return c[1:]


@dataclass
class SpectralData:
    z: complex
    char_poly_coeffs: np.ndarray
    eigenvalues: np.ndarray | None = None

    def to_dict(self) -> dict:
        d = {"z": [self.z.real, self.z.imag],
             "char_poly_coeffs": [[c.real, c.imag] for c in self.char_poly_coeffs]}
        if self.eigenvalues is not None:
            d["eigenvalues"] = [[e.real, e.imag] for e in self.eigenvalues]
        return d


def spectral_data(L: np.ndarray, z: complex, eigenvalues: bool = False) -> SpectralData:
    c = char_poly_coefficients(L)
    ev = np.roots(np.concatenate([[1.0], c])) if eigenvalues else None
    return SpectralData(complex(z), c, ev)


def spectral_invariants(lax: Callable, traj: Trajectory, z_samples) -> dict:
    """Track the characteristic-polynomial coefficients of ``L(z)`` along a trajectory.

    ``lax(state, z)`` returns the Lax matrix.  The report gives, per sample,
    the largest drift of any coefficient relative to ``1 + |c|``;
    ``max_abs_drift`` is the largest absolute drift overall.
    """
    z_samples = [complex(z) for z in z_samples]
    coeffs = np.array([[char_poly_coefficients(lax(s, z)) for z in z_samples] for s in traj.states])
    ref = coeffs[0]
    drift = np.abs(coeffs - ref[None]) / (1 + np.abs(ref[None]))
    per_sample = drift.max(axis=(0, 2))
    absolute = float(np.max(np.abs(coeffs - ref[None])))
    return {"z_samples": [[z.real, z.imag] for z in z_samples],
            "max_abs_drift": absolute,
            "max_drift_per_sample": per_sample.tolist(),
            "max_drift": float(per_sample.max()),
            "initial": coeffs[0], "final": coeffs[-1]}


def holomorphy_scan(lax: Callable, s: PhaseState, centers, radius: float = 1e-2, samples: int = 64):
    """Spectrum of ``L(z)`` on small circles around the given points.

    The characteristic-polynomial coefficients are holomorphic wherever the
    spectrum is, so their circle mean is the regular extrapolation to the
    centre.  Returns per centre: ``max_eig_circle`` (largest eigenvalue
    modulus on the circle), ``max_eig_center`` (from the extrapolated
    polynomial), their ratio, and the largest matrix entry on the circle.
    """
    out = []
    th = 2 * np.pi * np.arange(samples) / samples
    for c0 in centers:
        zs = complex(c0) + radius * np.exp(1j * th)
        Ls = [lax(s, z) for z in zs]
        coeffs = np.array([char_poly_coefficients(L) for L in Ls])
        eig_circle = max(float(np.max(np.abs(np.roots(np.concatenate([[1.0], c]))))) for c in coeffs)
        c_center = coeffs.mean(axis=0)
        eig_center = float(np.max(np.abs(np.roots(np.concatenate([[1.0], c_center])))))
        entry = float(max(np.max(np.abs(L)) for L in Ls))
        out.append({"center": [complex(c0).real, complex(c0).imag], "max_eig_circle": eig_circle,
                    "max_eig_center": eig_center,
                    "ratio": eig_circle / eig_center if eig_center > 0 else np.inf,
                    "max_entry": entry})
    return out


def cm_lax(coupling: CouplingData) -> Callable:
    """``(state, z) -> L(z)`` for the given couplings."""
    return lambda s, z: lax_matrix(s, coupling, z)
