"""Numerical construction of constrained spaces of L- and M-operators.

A field is written as ``sum_j x_j e_{b(j)}(z) X_{a(j)}`` where ``X_a`` runs
over a basis of (a subspace of) the value algebra and ``e_b`` over an
explicit elliptic pole basis.  Laurent conditions at the Tyurin points, with
the auxiliary data as extra unknowns, form one linear system whose numerical
nullspace is the requested space.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from ..elliptic import Lattice
from ..errors import AmbiguousSolution, DegenerateConfiguration, NonGenericTyurinData, NoSolution
from ..localfield import MatrixField, _same_point, expand_at
from .algebra import AlgebraKind
from .constraints import PointEquations, point_equations
from .polebasis import PoleFunction, basis_poles, build_pole_basis, evaluate_family
from .tyurin import Divisor, TyurinData

RANK_TOL = 1e-8
GAP_MIN = 1e3


@dataclass
class AnsatzGroup:
    """Algebra sub-basis ``matrices`` (shape ``(d, p, p)``) times scalar ``functions``."""

    matrices: np.ndarray
    functions: list

    @property
    def size(self) -> int:
        return self.matrices.shape[0] * len(self.functions)


class Ansatz:
    """Linear family of matrix fields over one or more :class:`AnsatzGroup`."""

    def __init__(self, groups, lattice: Lattice, kind: AlgebraKind):
        self.groups = list(groups)
        self.lattice = lattice
        self.kind = kind
        self.p = kind.p
        funcs: list[PoleFunction] = []
        for g in self.groups:
            for f in g.functions:
                if f not in funcs:
                    funcs.append(f)
        self.functions = funcs
        self._fidx = [[funcs.index(f) for f in g.functions] for g in self.groups]

    @property
    def n_unknowns(self) -> int:
        return sum(g.size for g in self.groups)

    @property
    def poles(self) -> list:
        return basis_poles(self.functions)

    def _split(self, x):
        out, off = [], 0
        for g in self.groups:
            d, nb = g.matrices.shape[0], len(g.functions)
            out.append(np.asarray(x[off:off + d * nb]).reshape(d, nb))
            off += d * nb
        return out

    def values(self, x, z) -> np.ndarray:
        """Field values at a 1-d array of points, shape ``(N, p, p)``."""
        z = np.atleast_1d(np.asarray(z, dtype=complex))
        E = evaluate_family(self.functions, z, self.lattice)
        out = np.zeros((z.size, self.p, self.p), dtype=complex)
        for g, idx, c in zip(self.groups, self._fidx, self._split(x)):
            out += np.einsum("nb,ab,apq->npq", E[:, idx], c, g.matrices)
        return out

    def field(self, x, kind: AlgebraKind | None = None) -> MatrixField:
        x = np.asarray(x, dtype=complex)

        def ev(z):
            v = self.values(x, z)
            return v[0] if np.ndim(z) == 0 else v
        return MatrixField(ev, self.p, self.poles, kind or self.kind, self.lattice, vectorized=True)

    def scalar_jets(self, center: complex, lo: int, hi: int, radius=None):
        fam = self.functions
        lat = self.lattice
        f = MatrixField(lambda z: evaluate_family(fam, z, lat), 0, self.poles, None, lat, vectorized=True)
        jet = expand_at(f, center, lo, hi, radius=radius)
        # coefficients below each function's known pole order vanish exactly
        for b, fn in enumerate(fam):
            order = max([m for q, m in fn.poles if _same_point(q, center, lat)] or [0])
            for k in range(lo, min(-order, hi + 1)):
                jet.coeffs[k - lo, b] = 0.0
        return jet

    def jet_maps(self, center: complex, lo: int, hi: int, radius=None) -> dict:
        """``{k: T_k}`` with ``T_k[j]`` the order-``k`` coefficient of the j-th unknown's field."""
        jet = self.scalar_jets(center, lo, hi, radius)
        out = {}
        for k in range(lo, hi + 1):
            ck = jet.coeff(k)
            parts = []
            for g, idx in zip(self.groups, self._fidx):
                # unknown ordering: a-major, then b
                parts.append(np.einsum("b,apq->abpq", ck[idx], g.matrices).reshape(-1, self.p, self.p))
            out[k] = np.concatenate(parts, axis=0)
        return out

    def to_dict(self) -> dict:
        return {"kind": self.kind.label,
                "groups": [{"matrices": _enc(g.matrices), "functions": [f.to_dict() for f in g.functions]}
                           for g in self.groups]}


def _enc(a) -> list:
    a = np.asarray(a, dtype=complex)
    return np.stack([a.real, a.imag], axis=-1).tolist()


class LinearSystem:
    """Rows ``A [x; aux] = b`` assembled from point equations and extra rows."""

    def __init__(self, nx: int):
        self.nx = nx
        self.n_aux = 0
        self._rows: list = []  # (name, Ax, {offset: Aaux}, rhs)
        self.points: list = []  # (PointEquations, offset)

    def add_point(self, eq: PointEquations) -> int:
        off = self.n_aux
        self.n_aux += eq.n_aux
        self.points.append((eq, off))
        for b in eq.blocks:
            self._rows.append((b.name, b.Ax, {off: b.Aaux} if b.Aaux is not None else {}, None))
        return off

    def add_rows(self, name: str, Ax: np.ndarray, aux: dict | None = None, rhs=None):
        self._rows.append((name, np.atleast_2d(Ax), aux or {}, rhs))

    def matrix(self):
        ncol = self.nx + self.n_aux
        blocks, rhs = [], []
        for _, Ax, aux, b in self._rows:
            R = np.zeros((Ax.shape[0], ncol), dtype=complex)
            R[:, : self.nx] = Ax
            for off, M in aux.items():
                R[:, self.nx + off: self.nx + off + M.shape[1]] = M
            blocks.append(R)
            rhs.append(np.zeros(Ax.shape[0], dtype=complex) if b is None else np.asarray(b, dtype=complex))
        return np.vstack(blocks), np.concatenate(rhs)


def _equilibrate(A):
    cn = np.linalg.norm(A, axis=0)
    cs = np.where(cn > 0, 1.0 / np.where(cn > 0, cn, 1.0), 1.0)
    B = A * cs
    rn = np.linalg.norm(B, axis=1)
    # rows that are pure roundoff carry no condition; drop them rather than amplify noise
    live = rn > 1e-12 * (rn.max() if rn.size else 1.0)
    rs = np.where(live, 1.0 / np.where(live, rn, 1.0), 0.0)
    return B * rs[:, None], rs, cs


@dataclass
class NullspaceResult:
    x_basis: np.ndarray  # (dim, nx), orthonormal rows
    full_basis: np.ndarray  # (dim, nx + naux)
    singular_values: np.ndarray
    rank: int
    gap_ratio: float


def nullspace(A: np.ndarray, nx: int, tol_rank: float = RANK_TOL, gap_min: float = GAP_MIN,
              check_gap: bool = True) -> NullspaceResult:
    """Equilibrated SVD nullspace; the x-part is returned orthonormalized.

    Raises
    ------
    NonGenericTyurinData
        When the singular values straddling the rank threshold are separated
        by less than ``gap_min``.
    """
    B, _, cs = _equilibrate(A)
    m, ncol = B.shape
    if m == 0:
        s = np.zeros(0)
        vh = np.eye(ncol, dtype=complex)
    else:
        _, s, vh = np.linalg.svd(B, full_matrices=True)
    smax = s[0] if s.size else 1.0
    rank = int(np.sum(s > tol_rank * smax))
    above = s[rank - 1] if rank > 0 else np.inf
    below = s[rank] if rank < s.size else 0.0
    gap = float(above / below) if below > 0 else np.inf
    if check_gap and gap < gap_min:
        raise NonGenericTyurinData(
            f"singular-value gap {gap:.3g} < {gap_min:.3g} at rank {rank} (s={above:.3g}/{below:.3g})")
    null = vh[rank:].conj().T * cs[:, None]  # columns in original coordinates
    xs = null[:nx]
    if xs.size:
        u, sx, _ = np.linalg.svd(xs, full_matrices=False)
        kx = int(np.sum(sx > 1e-10 * (sx[0] if sx.size else 1)))
        xb = u[:, :kx].T
    else:
        xb = np.zeros((0, nx), dtype=complex)
    full = null.T
    return NullspaceResult(xb, full, s, rank, gap)


@dataclass
class FunctionSpaceBasis:
    """Basis of a constrained space as coefficient vectors over an ansatz."""

    ansatz: Ansatz
    coefficient_basis: np.ndarray
    dimension: int
    singular_values: np.ndarray
    space_label: str
    gap_ratio: float
    expected_dimension: int | None = None
    tyurin: TyurinData | None = None
    info: dict = field(default_factory=dict)

    @property
    def pole_basis(self) -> list:
        return self.ansatz.functions

    def element(self, c) -> np.ndarray:
        return np.tensordot(np.asarray(c, dtype=complex), self.coefficient_basis, axes=1)

    def field(self, i: int) -> MatrixField:
        return self.ansatz.field(self.coefficient_basis[i])

    def combination(self, c) -> MatrixField:
        return self.ansatz.field(self.element(c))

    def random_field(self, rng: np.random.Generator) -> MatrixField:
        c = rng.standard_normal(self.dimension) + 1j * rng.standard_normal(self.dimension)
        return self.combination(c / np.linalg.norm(c))

    @property
    def matches_expected(self) -> bool:
        return self.expected_dimension is None or self.dimension == self.expected_dimension

    def to_dict(self) -> dict:
        d = {"space": self.space_label, "dimension": self.dimension,
             "expected_dimension": self.expected_dimension,
             "gap_ratio": None if not np.isfinite(self.gap_ratio) else self.gap_ratio,
             "singular_values": [float(v) for v in self.singular_values],
             "ansatz": self.ansatz.to_dict(),
             "coefficients": _enc(self.coefficient_basis)}
        if self.tyurin is not None:
            d["tyurin"] = self.tyurin.to_dict()
        d.update(self.info)
        return d

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)


# ---------------------------------------------------------------------------
# builders


def gamma_order(kind: AlgebraKind, space: str) -> int:
    """Pole order allowed at Tyurin points: 2 for sp/tsp, else 1."""
    return 2 if kind.tag in ("sp", "tsp") else 1


def _tyurin_for(T: TyurinData, kind: AlgebraKind) -> TyurinData:
    if T.kind == kind:
        return T
    if T.kind.diamond() == kind:
        return T.embedded()
    raise ValueError(f"Tyurin data of kind {T.kind.label} cannot be used for {kind.label}")


def _check_disjoint(D: Divisor, T: TyurinData, lat):
    from ..localfield import _lattice_distance
    for q, _ in D.points:
        for g in T.points:
            if _lattice_distance(np.array([q - g]), lat)[0] < 1e-9:
                raise DegenerateConfiguration("divisor point coincides with a Tyurin point")


def _add_gamma_conditions(sysm: LinearSystem, ans: Ansatz, T: TyurinData, kind, role, order,
                          gauge: bool | None = None):
    hi = 1 if kind.tag in ("sp", "tsp") else 0
    for g, a in zip(T.points, T.alphas):
        Tm = ans.jet_maps(g, -order, hi)
        sysm.add_point(point_equations(Tm, a, kind, role, point=g, gauge=gauge))


def solve_constrained_space(kind: AlgebraKind, D: Divisor, T: TyurinData, space: str,
                            lat: Lattice, tol_rank: float = RANK_TOL) -> FunctionSpaceBasis:
    """Basis of ``L^D`` (``space='L'``) or ``N^D`` (``space='N'``).

    ``L^D``: L-operators of ``kind`` with poles bounded by ``D`` away from the
    Tyurin points.  ``N^D``: M-operators valued in ``kind.diamond()`` with
    poles bounded by ``D + delta * sum gamma_s``.
    """
    space = {"L^D": "L", "N^D": "N"}.get(space, space)
    if space not in ("L", "N"):
        raise ValueError("space must be 'L' or 'N'")
    vkind = kind if space == "L" else kind.diamond()
    T = _tyurin_for(T, vkind)
    T.validate(lat)
    _check_disjoint(D, T, lat)
    order = gamma_order(kind, space)
    budget = list(D.points) + [(g, order) for g in T.points]
    funcs = build_pole_basis(budget, lat)
    ans = Ansatz([AnsatzGroup(vkind.basis.astype(complex), funcs)], lat, vkind)
    sysm = LinearSystem(ans.n_unknowns)
    _add_gamma_conditions(sysm, ans, T, vkind, "L" if space == "L" else "M", order)
    A, _ = sysm.matrix()
    ns = nullspace(A, ans.n_unknowns, tol_rank)
    expected = vkind.dim * D.degree if space == "L" else vkind.dim * (D.degree + 1)
    label = "L^D" if space == "L" else "N^D"
    info = {"kind": vkind.label, "divisor_degree": D.degree}
    if space == "N" and vkind.epsilon == -1:
        # without the gauge row, mu -> mu + t alpha adds one auxiliary direction per point;
        # the resulting nullity counts mu as a free vector, as in a naive parameter count
        raw = LinearSystem(ans.n_unknowns)
        _add_gamma_conditions(raw, ans, T, vkind, "M", order, gauge=False)
        A2, _ = raw.matrix()
        info["parameter_count"] = int(nullspace(A2, ans.n_unknowns, tol_rank, check_gap=False)
                                      .full_basis.shape[0])
    return FunctionSpaceBasis(ans, ns.x_basis, ns.x_basis.shape[0], ns.singular_values, label,
                              ns.gap_ratio, expected, T, info)


def block_subbasis(kind: AlgebraKind, mask: np.ndarray) -> np.ndarray:
    """Orthonormal basis of algebra elements vanishing where ``mask`` is false."""
    B = kind.basis.reshape(kind.dim, -1)
    off = ~np.asarray(mask, dtype=bool).ravel()
    M = B[:, off].T  # conditions on coefficients
    if M.size == 0:
        return kind.basis.copy()
    _, s, vh = np.linalg.svd(M)
    rank = int(np.sum(s > 1e-10))
    c = vh[rank:]
    sub = c @ B
    return sub.reshape(-1, kind.p, kind.p)


def so_variant_space(kind: AlgebraKind, D: Divisor, q: list, alphas_plus: list, alphas_minus: list,
                     lat: Lattice, tol_rank: float = RANK_TOL) -> FunctionSpaceBasis:
    """so(2n)-valued M-operators with the block pole split at ``+q_i`` and ``-q_i``.

    The blocks ``A`` and ``C`` of ``[[A, B], [C, -A^t]]`` may have simple
    poles at ``q_i``; ``B`` may have simple poles at ``-q_i``.  At ``q_i``
    the residue is ``(a mu^t - mu a^t) sigma`` for the isotropic vector
    ``alphas_plus[i]``; at ``-q_i`` it has the same form with
    ``a = (a', 0)``, ``mu = (mu', 0)`` where ``a' = alphas_minus[i]``.  The
    velocities ``-mu^t sigma a`` at ``q_i`` and ``-mu'^t a'`` at ``-q_i``
    are tied by ``qdot_i + (-qdot_i) = 0``, which also fixes the
    ``mu' -> mu' + t a'`` ambiguity at ``-q_i``.
    """
    if kind.tag != "so" or kind.p % 2:
        raise ValueError("the split-pole space is defined for so(2n)")
    n = kind.p // 2
    if len(q) != n:
        raise ValueError(f"need n = {n} positions")
    mask_ac = np.ones((2 * n, 2 * n), dtype=bool)
    mask_ac[:n, n:] = False
    mask_b = ~mask_ac
    X1 = block_subbasis(kind, mask_ac).astype(complex)
    X2 = block_subbasis(kind, mask_b).astype(complex)
    plus = [complex(x) for x in q]
    minus = [-x for x in plus]
    f1 = build_pole_basis(list(D.points) + [(x, 1) for x in plus], lat)
    f2 = build_pole_basis(list(D.points) + [(x, 1) for x in minus], lat)
    ans = Ansatz([AnsatzGroup(X1, f1), AnsatzGroup(X2, f2)], lat, kind)
    sysm = LinearSystem(ans.n_unknowns)
    sig = kind.sigma
    offs_p, offs_m, ap_list, am_list = [], [], [], []
    for x, a in zip(plus, alphas_plus):
        a = np.asarray(a, dtype=complex)
        a = a / np.linalg.norm(a)
        if abs(a @ sig @ a) > 1e-10:
            raise DegenerateConfiguration("alpha at +q must be isotropic")
        offs_p.append(sysm.add_point(point_equations(ans.jet_maps(x, -1, 0), a, kind, "M", point=x)))
        ap_list.append(a)
    for x, a1 in zip(minus, alphas_minus):
        a = np.zeros(2 * n, dtype=complex)
        a[:n] = np.asarray(a1, dtype=complex)
        a = a / np.linalg.norm(a)
        offs_m.append(sysm.add_point(point_equations(ans.jet_maps(x, -1, 0), a, kind, "M",
                                                     support=range(n), gauge=False, point=x)))
        am_list.append(a)
    for op, om, ap, am in zip(offs_p, offs_m, ap_list, am_list):
        # mu_i . (sigma a_i) + mu'_{-i} . a'_{-i} = 0
        sysm.add_rows("link", np.zeros((1, ans.n_unknowns), dtype=complex),
                      {op: (sig @ ap)[None, :], om: am[:n][None, :]})
    A, _ = sysm.matrix()
    ns = nullspace(A, ans.n_unknowns, tol_rank)
    return FunctionSpaceBasis(ans, ns.x_basis, ns.x_basis.shape[0], ns.singular_values, "N^D(split)",
                              ns.gap_ratio, kind.dim * (D.degree + 1), None,
                              {"kind": kind.label, "divisor_degree": D.degree})


# ---------------------------------------------------------------------------
# graded pieces


def graded_budget(m: int, Pplus: complex, Pminus: complex):
    """Pole budget and vanishing conditions of the degree-``m`` piece (genus one).

    Returns ``(budget, zeros)`` where ``zeros`` is a list of
    ``(point, orders)`` whose Laurent coefficients must vanish.
    """
    if m >= 0:
        budget = [(Pminus, m + 1)]
        zeros = [(Pplus, list(range(0, m)))] if m > 0 else []
    else:
        budget = [(Pplus, -m)]
        zeros = [(Pminus, list(range(0, -m - 1)))] if m <= -2 else []
    return budget, zeros


def graded_subspace(kind: AlgebraKind, m: int, Pplus: complex, Pminus: complex, T: TyurinData,
                    lat: Lattice, tol_rank: float = RANK_TOL) -> FunctionSpaceBasis:
    """L-operators of degree ``m``: order ``>= m`` at ``P+`` and ``>= -m-1`` at ``P-``."""
    T = _tyurin_for(T, kind)
    T.validate(lat)
    budget, zeros = graded_budget(m, complex(Pplus), complex(Pminus))
    _check_disjoint(Divisor(budget + [(p, 1) for p, _ in zeros]), T, lat)
    order = gamma_order(kind, "L")
    funcs = build_pole_basis(budget + [(g, order) for g in T.points], lat)
    ans = Ansatz([AnsatzGroup(kind.basis.astype(complex), funcs)], lat, kind)
    sysm = LinearSystem(ans.n_unknowns)
    _add_gamma_conditions(sysm, ans, T, kind, "L", order)
    for pt, orders in zeros:
        if orders:
            Tm = ans.jet_maps(pt, 0, max(orders))
            for k in orders:
                sysm.add_rows(f"zero{k}", Tm[k].reshape(ans.n_unknowns, -1).T)
    A, _ = sysm.matrix()
    ns = nullspace(A, ans.n_unknowns, tol_rank)
    return FunctionSpaceBasis(ans, ns.x_basis, ns.x_basis.shape[0], ns.singular_values, f"graded_{m}",
                              ns.gap_ratio, kind.dim, T,
                              {"kind": kind.label, "m": m,
                               "Pplus": [complex(Pplus).real, complex(Pplus).imag],
                               "Pminus": [complex(Pminus).real, complex(Pminus).imag]})


def leading_coefficients(basis: FunctionSpaceBasis, m: int, Pplus: complex) -> np.ndarray:
    """Order-``m`` Laurent coefficient at ``P+`` of each basis element, shape ``(dim, p, p)``."""
    ans = basis.ansatz
    Tm = ans.jet_maps(complex(Pplus), min(m, 0), max(m, 0))[m]
    return np.tensordot(basis.coefficient_basis, Tm, axes=1)


@dataclass
class LocalElement:
    field: MatrixField
    coefficients: np.ndarray
    residual: float
    condition: float


def local_element(basis: FunctionSpaceBasis, X: np.ndarray, m: int, Pplus: complex) -> LocalElement:
    """The element of the degree-``m`` piece whose leading term at ``P+`` is ``X z_+^m``.

    Raises
    ------
    NoSolution, AmbiguousSolution
        When the leading-coefficient map is not onto / not injective.
    """
    lead = leading_coefficients(basis, m, Pplus)
    p = lead.shape[-1]
    kind = basis.ansatz.kind
    # work in algebra coordinates so the map is square
    Lc = np.array([kind.coordinates(Y) for Y in lead]).T  # (dim g, dim space)
    s = np.linalg.svd(Lc, compute_uv=False)
    cond = float(s[0] / s[-1]) if s[-1] > 0 else np.inf
    if Lc.shape[1] > Lc.shape[0] or s[-1] < 1e-10 * s[0]:
        raise AmbiguousSolution(f"leading-coefficient map has a kernel (condition {cond:.3g})")
    rhs = kind.coordinates(X)
    c, *_ = np.linalg.lstsq(Lc, rhs, rcond=None)
    res = float(np.max(np.abs(np.tensordot(c, lead, axes=1) - np.asarray(X).reshape(p, p))))
    if res > 1e-8 * max(1.0, float(np.max(np.abs(X)))):
        raise NoSolution(f"leading term not attained, residual {res:.3g}")
    return LocalElement(basis.combination(c), c, res, cond)


def sample_points(lat: Lattice, rng: np.random.Generator, count: int, poles, min_dist: float = 0.08):
    from ..localfield import _lattice_distance
    w1, w3 = lat.periods
    out = []
    while len(out) < count:
        z = complex(rng.uniform(-0.5, 0.5) * w1 + rng.uniform(-0.5, 0.5) * w3)
        if all(_lattice_distance(np.array([z - q]), lat)[0] > min_dist * lat.min_period for q, _ in poles):
            out.append(z)
    return np.array(out)


def almost_graded_residual(bases: dict, m: int, k: int, spread: int, rng: np.random.Generator,
                           samples: int = 40) -> float:
    """Relative least-squares residual of ``[x, y]`` against degrees ``m+k .. m+k+spread``.

    ``bases`` maps degree to :class:`FunctionSpaceBasis` (same Tyurin data and
    marked points).  ``x`` and ``y`` are random elements of degrees ``m`` and ``k``.
    """
    bx, by = bases[m], bases[k]
    fx, fy = bx.random_field(rng), by.random_field(rng)
    targets = [bases[d] for d in range(m + k, m + k + spread + 1)]
    poles = bx.ansatz.poles + by.ansatz.poles + [q for b in targets for q in b.ansatz.poles]
    z = sample_points(bx.ansatz.lattice, rng, samples, poles)
    X, Y = fx.sample(z), fy.sample(z)
    C = (X @ Y - Y @ X).ravel()
    cols = []
    for b in targets:
        for i in range(b.dimension):
            cols.append(b.field(i).sample(z).ravel())
    A = np.array(cols).T
    scale = np.linalg.norm(A, axis=0)
    coef, *_ = np.linalg.lstsq(A / scale, C, rcond=None)
    return float(np.linalg.norm(A / scale @ coef - C) / max(np.linalg.norm(C), 1e-300))
