"""Elliptic Calogero-Moser Lax matrices and Hamiltonians for gl(n), so(2n), sp(2n).

Off-diagonal entries are built from the Weierstrass sigma function so that
every entry is elliptic in ``z`` with simple poles at ``z = 0`` and at the
positions (``q_i`` for gl, ``+-q_i`` for the so/sp blocks).  The second-order
Hamiltonians follow from ``sigma(z+a) sigma(z-a) / (sigma(z)^2 sigma(a)^2) =
wp(a) - wp(z)``.

The sp Lax matrix is embedded in ``(2n+2) x (2n+2)`` matrices with a zero
border; its diagonal couplings satisfy ``fB_ii fC_ii = -epsilon`` so that the
residue Hamiltonian carries ``+epsilon sum_i wp(2 q_i)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .elliptic import Lattice, lattice_from_periods, reduce_to_cell, sigma, wp, wp_prime
from .errors import DegenerateConfiguration, PoleAtZ
from .laxspace.algebra import AlgebraKind
from .localfield import MatrixField, _same_point, expand_at

KINDS = ("gl", "so", "sp")
STATE_TOL = 1e-3


def _cdist(d, lat) -> float:
    z0, _, _ = reduce_to_cell(complex(d), lat)
    return abs(z0)


@dataclass
class PhaseState:
    """Positions and momenta of ``n`` particles on the curve."""

    q: np.ndarray
    p: np.ndarray
    lattice: Lattice

    def __post_init__(self):
        self.q = np.asarray(self.q, dtype=complex).ravel()
        self.p = np.asarray(self.p, dtype=complex).ravel()
        if self.q.shape != self.p.shape:
            raise ValueError("q and p differ in length")
        if self.n < 1:
            raise ValueError("need at least one particle")

    @property
    def n(self) -> int:
        return self.q.size

    def min_separation(self, kind: str = "gl") -> float:
        """Smallest distance (mod lattice, in units of the shortest period) between
        any pair of points that must stay apart for ``kind``."""
        lat, q = self.lattice, self.q
        d = [_cdist(x, lat) for x in q]
        for i in range(self.n):
            for j in range(i):
                d.append(_cdist(q[i] - q[j], lat))
                if kind != "gl":
                    d.append(_cdist(q[i] + q[j], lat))
            if kind == "sp":
                d.append(_cdist(2 * q[i], lat))
        return float(min(d) / lat.min_period) if d else np.inf

    def validate(self, kind: str = "gl", tol: float = 1e-9) -> None:
        if self.min_separation(kind) < tol:
            raise DegenerateConfiguration(f"positions collide for kind {kind}")

    def replace(self, q=None, p=None) -> "PhaseState":
        return PhaseState(self.q if q is None else q, self.p if p is None else p, self.lattice)

    def vector(self) -> np.ndarray:
        return np.concatenate([self.q, self.p])

    @classmethod
    def from_vector(cls, y, lattice) -> "PhaseState":
        y = np.asarray(y, dtype=complex)
        n = y.size // 2
        return cls(y[:n], y[n:], lattice)

    def to_dict(self) -> dict:
        return {"q": [[x.real, x.imag] for x in self.q], "p": [[x.real, x.imag] for x in self.p],
                "lattice": self.lattice.to_dict()}

    @classmethod
    def from_dict(cls, d: dict) -> "PhaseState":
        lat = d["lattice"]
        lattice = lattice_from_periods(complex(*lat["omega1"]), complex(*lat["omega3"]))
        return cls([complex(*x) for x in d["q"]], [complex(*x) for x in d["p"]], lattice)


@dataclass
class CouplingData:
    """Coupling constants.

    ``f_gl[i, j]`` multiplies the ``A`` entries and must satisfy
    ``f_ij f_ji = 1``.  ``f_b[i, j]`` (``i < j``) and ``f_c[j, i]`` multiply
    the ``B`` and ``C`` entries with ``f_b[i, j] f_c[j, i] = -1``.  For sp,
    the diagonal products are ``f_b[i, i] f_c[i, i] = -epsilon``.
    """

    kind: str
    n: int
    f_gl: np.ndarray | None = None
    f_b: np.ndarray | None = None
    f_c: np.ndarray | None = None
    epsilon: complex = 1.0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"kind must be one of {KINDS}")
        n = self.n
        if self.f_gl is None:
            self.f_gl = np.ones((n, n), dtype=complex)
        if self.f_b is None:
            self.f_b = np.ones((n, n), dtype=complex)
        if self.f_c is None:
            self.f_c = -np.ones((n, n), dtype=complex)
            if self.kind == "sp":
                np.fill_diagonal(self.f_c, -self.epsilon)
        self.f_gl = np.asarray(self.f_gl, dtype=complex)
        self.f_b = np.asarray(self.f_b, dtype=complex)
        self.f_c = np.asarray(self.f_c, dtype=complex)
        self.check()

    def check(self, tol: float = 1e-12) -> None:
        n = self.n
        for i in range(n):
            for j in range(n):
                if i != j and abs(self.f_gl[i, j] * self.f_gl[j, i] - 1) > tol:
                    raise ValueError("f_ij f_ji must equal 1")
                if i < j and self.kind != "gl" and abs(self.f_b[i, j] * self.f_c[j, i] + 1) > tol:
                    raise ValueError("fB_ij fC_ji must equal -1")
            if self.kind == "sp" and abs(self.f_b[i, i] * self.f_c[i, i] + self.epsilon) > tol:
                raise ValueError("fB_ii fC_ii must equal -epsilon")

    @property
    def algebra(self) -> AlgebraKind:
        """Value algebra of the Lax matrix (tsp for the bordered sp matrix)."""
        return {"gl": AlgebraKind("gl", self.n), "so": AlgebraKind("so", 2 * self.n),
                "sp": AlgebraKind("tsp", 2 * self.n + 2)}[self.kind]

    def to_dict(self) -> dict:
        def enc(a):
            return np.stack([a.real, a.imag], axis=-1).tolist()
        return {"kind": self.kind, "n": self.n, "f_gl": enc(self.f_gl), "f_b": enc(self.f_b),
                "f_c": enc(self.f_c), "epsilon": [complex(self.epsilon).real, complex(self.epsilon).imag]}

    @classmethod
    def from_dict(cls, d: dict) -> "CouplingData":
        def dec(a):
            a = np.asarray(a, dtype=float)
            return a[..., 0] + 1j * a[..., 1]
        eps = d.get("epsilon", 1.0)
        eps = complex(*eps) if isinstance(eps, (list, tuple)) else complex(eps)
        return cls(d["kind"], int(d["n"]), *(dec(d[k]) if k in d else None for k in ("f_gl", "f_b", "f_c")),
                   epsilon=eps)


# ---------------------------------------------------------------------------
# Lax matrices


def _poles(s: PhaseState, kind: str):
    pts = [0j] + list(s.q)
    if kind != "gl":
        pts += list(-s.q)
    return pts


def _check_z(z, s: PhaseState, kind: str):
    lat = s.lattice
    for x in _poles(s, kind):
        if np.any(np.abs(reduce_to_cell(np.asarray(z) - x, lat)[0]) < 1e-8 * lat.min_period):
            raise PoleAtZ(f"spectral parameter hits a pole at {x}")


def _a_block(s: PhaseState, f: np.ndarray, z: np.ndarray) -> np.ndarray:
    lat, q, n = s.lattice, s.q, s.n
    out = np.zeros(z.shape + (n, n), dtype=complex)
    sz = sigma(z, lat)
    sq = sigma(q, lat)
    szq = [sigma(z - qj, lat) for qj in q]
    for i in range(n):
        for j in range(n):
            if i == j:
                out[..., j, j] = s.p[j]
            else:
                num = sigma(z + q[j] - q[i], lat) * szq[j] * sq[i]
                den = sz * szq[i] * sigma(q[j] - q[i], lat) * sq[j]
                out[..., i, j] = f[i, j] * num / den
    return out


def _b_entry(s, i, j, z, sz):
    lat, q = s.lattice, s.q
    return (sigma(z + q[j] + q[i], lat) * sigma(z - q[j], lat)
            / (sz * sigma(z + q[i], lat) * sigma(q[i] + q[j], lat)))


def _c_entry(s, i, j, z, sz):
    # C_ji for the pair (i, j)
    lat, q = s.lattice, s.q
    return (sigma(z - q[j] - q[i], lat) * sigma(z + q[i], lat)
            / (sz * sigma(z - q[j], lat) * sigma(q[i] + q[j], lat)))


def _bc_blocks(s: PhaseState, c: CouplingData, z: np.ndarray, symmetric: bool):
    n = s.n
    B = np.zeros(z.shape + (n, n), dtype=complex)
    C = np.zeros(z.shape + (n, n), dtype=complex)
    sz = sigma(z, s.lattice)
    sgn = 1.0 if symmetric else -1.0
    for i in range(n):
        for j in range(i if symmetric else i + 1, n):
            b = c.f_b[i, j] * _b_entry(s, i, j, z, sz)
            cc = c.f_c[j, i] * _c_entry(s, i, j, z, sz)
            B[..., i, j] = b
            C[..., j, i] = cc
            if i != j:
                B[..., j, i] = sgn * b
                C[..., i, j] = sgn * cc
    return B, C


def lax_gl(s: PhaseState, c: CouplingData, z):
    """gl(n) Lax matrix at ``z`` (scalar or 1-d array; arrays add a leading axis)."""
    za = np.asarray(z, dtype=complex)
    _check_z(za, s, "gl")
    return _a_block(s, c.f_gl, za)


def lax_so(s: PhaseState, c: CouplingData, z):
    """so(2n) Lax matrix ``[[A, B], [C, -A^t]]`` with skew ``B``, ``C``."""
    za = np.asarray(z, dtype=complex)
    _check_z(za, s, "so")
    A = _a_block(s, c.f_gl, za)
    B, C = _bc_blocks(s, c, za, symmetric=False)
    return np.block([[A, B], [C, -np.swapaxes(A, -1, -2)]])


def lax_sp(s: PhaseState, c: CouplingData, z):
    """Bordered ``(2n+2) x (2n+2)`` sp(2n) Lax matrix with symmetric ``B``, ``C``."""
    za = np.asarray(z, dtype=complex)
    _check_z(za, s, "sp")
    A = _a_block(s, c.f_gl, za)
    B, C = _bc_blocks(s, c, za, symmetric=True)
    inner = np.block([[A, B], [C, -np.swapaxes(A, -1, -2)]])
    m = 2 * s.n + 2
    out = np.zeros(za.shape + (m, m), dtype=complex)
    out[..., 1:-1, 1:-1] = inner
    return out


LAX = {"gl": lax_gl, "so": lax_so, "sp": lax_sp}


def lax_matrix(s: PhaseState, c: CouplingData, z):
    return LAX[c.kind](s, c, z)


def lax_field(s: PhaseState, c: CouplingData) -> MatrixField:
    """The Lax matrix as a :class:`MatrixField` with its declared simple poles."""
    poles = [(x, 1) for x in _poles(s, c.kind)]
    return MatrixField(lambda z: lax_matrix(s, c, z), c.algebra.p, poles, c.algebra, s.lattice,
                       vectorized=True)


# ---------------------------------------------------------------------------
# Hamiltonians


def hamiltonian_closed_form(s: PhaseState, c: CouplingData) -> complex:
    """Second-order Hamiltonian in closed form.

    gl: ``-1/2 sum p^2 + sum_{i<j} wp(q_i - q_j)``;
    so: ``-sum p^2 + 2 sum_{i<j} [wp(q_i - q_j) + wp(q_i + q_j)]``;
    sp: the so expression ``+ epsilon sum_i wp(2 q_i)``.
    """
    lat, q, p = s.lattice, s.q, s.p
    iu, ju = np.triu_indices(s.n, 1)
    pair_minus = np.sum(wp(q[iu] - q[ju], lat)) if iu.size else 0
    if c.kind == "gl":
        return complex(-0.5 * np.sum(p * p) + pair_minus)
    pair_plus = np.sum(wp(q[iu] + q[ju], lat)) if iu.size else 0
    h = -np.sum(p * p) + 2 * pair_minus + 2 * pair_plus
    if c.kind == "sp":
        h = h + c.epsilon * np.sum(wp(2 * q, lat))
    return complex(h)


def hamiltonian_gradient(s: PhaseState, c: CouplingData):
    """Analytic ``(dH/dq, dH/dp)`` of :func:`hamiltonian_closed_form`."""
    lat, q, p, n = s.lattice, s.q, s.p, s.n
    off = ~np.eye(n, dtype=bool)
    diff = (q[:, None] - q[None, :])[off]
    w = 1.0 if c.kind == "gl" else 2.0
    dq = np.zeros((n, n), dtype=complex)
    dq[off] = w * wp_prime(diff, lat)
    if c.kind != "gl":
        dq[off] += 2.0 * wp_prime((q[:, None] + q[None, :])[off], lat)
    dq = dq.sum(axis=1)
    if c.kind == "sp":
        dq += 2.0 * c.epsilon * wp_prime(2 * q, lat)
    dp = -p if c.kind == "gl" else -2.0 * p
    return dq, dp


def trace_power_field(field: MatrixField, k: int, m: int, P: complex) -> MatrixField:
    """Scalar field ``tr((z - P)^(-m) L(z)^(k+1))``."""
    P = complex(P)

    def ev(z):
        Lz = field.sample(z)
        Lk = np.linalg.matrix_power(Lz, k + 1)
        return np.trace(Lk, axis1=-2, axis2=-1) * (np.atleast_1d(z) - P) ** (-m)
    poles = [(x, o * (k + 1)) for x, o in field.declared_poles]
    if m > 0:
        hit = [i for i, (x, _) in enumerate(poles) if _same_point(x, P, field.lattice)]
        if hit:
            poles[hit[0]] = (poles[hit[0]][0], poles[hit[0]][1] + m)
        else:
            poles.append((P, m))
    return MatrixField(ev, 0, poles, None, field.lattice, vectorized=True)


def hamiltonian_via_residue(field: MatrixField, k: int = 1, m: int = 1, P: complex = 0j,
                            radius: float | None = None, samples: int = 256) -> complex:
    """``-1/(k+1) res_P tr((z - P)^(-m) L^(k+1)) dz`` by a contour integral."""
    f = trace_power_field(field, k, m, P)
    jet = expand_at(f, P, -1, -1, radius=radius, samples=samples)
    return complex(-jet.coeff(-1) / (k + 1))


def total_momentum(s: PhaseState, c: CouplingData | None = None) -> complex:
    return complex(np.sum(s.p))


# ---------------------------------------------------------------------------
# random states


def random_state(kind: str, n: int, lat: Lattice, rng: np.random.Generator, min_sep: float = 0.12,
                 p_scale: float = 1.0, real: bool = False, max_tries: int = 10000) -> PhaseState:
    """Random state whose positions keep the kind's separations above ``min_sep``.

    With ``real=True`` positions lie on the real period and momenta are real,
    which keeps the Hamiltonian real on a rectangular lattice.
    """
    w1, w3 = lat.periods
    for _ in range(max_tries):
        if real:
            q = rng.uniform(-0.5, 0.5, n) * w1
            p = rng.standard_normal(n) * p_scale
        else:
            q = rng.uniform(-0.5, 0.5, n) * w1 + rng.uniform(-0.5, 0.5, n) * w3
            p = (rng.standard_normal(n) + 1j * rng.standard_normal(n)) * p_scale
        s = PhaseState(q, p, lat)
        if s.min_separation(kind) > min_sep:
            return s
    raise DegenerateConfiguration("could not sample a separated state")


def tyurin_from_lax(s: PhaseState, c: CouplingData):
    """gl Tyurin data read off the residues: ``gamma_s = q_s``, ``alpha_s = e_s``."""
    from .laxspace.tyurin import TyurinData
    if c.kind != "gl":
        raise ValueError("only the gl Lax matrix has rank-one residues at the positions")
    return TyurinData(list(s.q), list(np.eye(s.n)), AlgebraKind("gl", s.n))
