"""Commuting flows ``dL/dt_a = [L, M_a]`` built by singular-part matching.

For an index ``a = (P, k, m)`` the operator ``M_a`` is the element of the
M-operator space ``N^D``, ``D = (m + k ord_P L) P``, whose principal part at
``P`` equals that of ``(z - P)^(-m) L(z)^k`` and which vanishes at a fixed
point ``P0``.

Two conventions matter when these flows are compared with Calogero-Moser
dynamics in canonical coordinates:

* The flow generated by ``M_a`` is the canonical flow of ``-H_a``
  (``q_dot = dH_a/dp`` reversed), matching ``gamma_dot = -mu^t sigma alpha``.
* The normalization ``M_a(P0) = 0`` fixes a gauge different from the one
  in which the CM matrix is written (``alpha_s = e_s`` and constant residue
  at ``z = 0``).  The two differ by a constant ``C``; :func:`cm_gauge_constant`
  determines it from those two gauge conditions alone, and the Lax equation
  is then checked with ``M_a + C``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .cmsystems import CouplingData, PhaseState, lax_field, lax_matrix, tyurin_from_lax
from .dynamics import ResidueHamiltonian, ClosedFormHamiltonian, flow_map, poisson_bracket
from .errors import AmbiguousSolution, NoSolution
from .laxspace.algebra import AlgebraKind
from .laxspace.constraints import check_m_constraints, commutator_field, fit_point
from .laxspace.spaces import solve_constrained_space
from .laxspace.tyurin import Divisor, TyurinData
from .localfield import MatrixField, _same_point, default_radius, expand_at

LAX_ORIENTATION = -1
DEFAULT_P0 = 0.23 + 0.17j


@dataclass(frozen=True)
class HierarchyIndex:
    """Flow label ``a = (P, k, m)`` with ``k > 0`` and ``m > -m_P``.

    ``m_P`` is the multiplicity of ``P`` in the divisor of allowed poles of
    ``L``.  For so and sp kinds only odd ``k`` give flows.
    """

    P: complex = 0j
    k: int = 1
    m: int = 1
    m_P: int = 0
    kind_tag: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "P", complex(self.P))
        if self.k <= 0:
            raise ValueError("k must be positive")
        if self.m <= -self.m_P:
            raise ValueError(f"m must exceed -m_P = {-self.m_P}")
        if self.kind_tag in ("so", "sp", "tsp") and self.k % 2 == 0:
            raise ValueError("k must be odd for so and sp kinds")

    def to_dict(self) -> dict:
        return {"P": [self.P.real, self.P.imag], "k": self.k, "m": self.m}


def _order_at(f: MatrixField, P: complex) -> int:
    return max([o for q, o in f.declared_poles if _same_point(q, P, f.lattice)] or [0])


def power_field(L: MatrixField, k: int, m: int, P: complex, embed=None) -> MatrixField:
    """``(z - P)^(-m) L(z)^k``, optionally mapped through ``embed``."""
    P = complex(P)

    def ev(z):
        zz = np.atleast_1d(np.asarray(z, dtype=complex))
        V = np.linalg.matrix_power(L.sample(zz), k) * ((zz - P) ** (-m))[:, None, None]
        if embed is not None:
            V = embed(V)
        return V[0] if np.ndim(z) == 0 else V
    poles = [(q, o * k) for q, o in L.declared_poles]
    hit = [i for i, (q, _) in enumerate(poles) if _same_point(q, P, L.lattice)]
    if hit:
        poles[hit[0]] = (poles[hit[0]][0], poles[hit[0]][1] + m)
    elif m > 0:
        poles.append((P, m))
    size = L.size if embed is None else None
    return MatrixField(ev, size or 0, poles, None, L.lattice, vectorized=True)


@dataclass
class MaResult:
    field: MatrixField
    coefficients: np.ndarray
    residual: float
    radius_check: float
    nullity: int
    n_conditions: int
    space_dimension: int
    singular_values: np.ndarray
    normalization: str
    index: HierarchyIndex
    P0: complex
    depth: int
    info: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"index": self.index.to_dict(), "P0": [self.P0.real, self.P0.imag],
                "depth": self.depth, "space_dimension": self.space_dimension,
                "n_conditions": self.n_conditions, "nullity": self.nullity,
                "residual": self.residual, "radius_check": self.radius_check,
                "normalization": self.normalization,
                "min_singular_value": float(self.singular_values[-1]) if self.singular_values.size else 0.0,
                **self.info}


def construct_ma(L: MatrixField, a: HierarchyIndex, T: TyurinData, P0: complex = DEFAULT_P0,
                 tol: float = 1e-8, normalization: str | None = None) -> MaResult:
    """Solve for ``M_a`` inside ``N^D``.

    Parameters
    ----------
    L : MatrixField
        An L-operator for the Tyurin data ``T`` (values in ``T.kind``).
    normalization : {'full', 'inner'}, optional
        ``'full'`` imposes ``M_a(P0) = 0``; ``'inner'`` only the inner
        ``sp`` block of a ``tsp`` value (the default for sp kinds).

    Raises
    ------
    NoSolution
        If the matching system is inconsistent beyond ``tol``.
    AmbiguousSolution
        If a nullspace survives the normalization.
    """
    kind = T.kind
    vkind = kind.diamond()
    lat = L.lattice
    P, P0 = complex(a.P), complex(P0)
    if normalization is None:
        normalization = "inner" if kind.tag == "sp" else "full"
    depth = a.m + a.k * _order_at(L, P)
    embed = kind.embed if vkind != kind else None
    target = power_field(L, a.k, a.m, P, embed)
    if depth > 0:
        D = Divisor([(P, depth)])
    else:
        D = Divisor([])
    basis = solve_constrained_space(kind, D, T, "N", lat) if D.points else _n_zero(kind, T, lat)
    ans = basis.ansatz
    B = basis.coefficient_basis
    dim = basis.dimension
    p = vkind.p

    def matching(radius):
        rows, rhs = [], []
        if depth > 0:
            Tm = ans.jet_maps(P, -depth, -1, radius=radius)
            jet = expand_at(target, P, -depth, -1, radius=radius)
            for kk in range(-depth, 0):
                rows.append(np.tensordot(B, Tm[kk], axes=1).reshape(dim, -1).T)
                rhs.append(jet.coeff(kk).ravel())
        return rows, rhs

    rows, rhs = matching(None)
    V0 = np.array([basis.field(i).sample(np.array([P0]))[0] for i in range(dim)])
    if normalization == "inner":
        sel = kind.inner_block(V0)
    else:
        sel = V0
    rows.append(sel.reshape(dim, -1).T)
    rhs.append(np.zeros(rows[-1].shape[0], dtype=complex))
    A = np.vstack(rows)
    b = np.concatenate(rhs)
    scale = np.linalg.norm(A, axis=0)
    scale[scale == 0] = 1.0
    sv = np.linalg.svd(A / scale, compute_uv=False)
    rank = int(np.sum(sv > 1e-10 * sv[0]))
    nullity = dim - rank
    y, *_ = np.linalg.lstsq(A / scale, b, rcond=None)
    c = y / scale
    bscale = max(1.0, float(np.max(np.abs(b))))
    residual = float(np.max(np.abs(A @ c - b))) / bscale
    if nullity > 0:
        raise AmbiguousSolution(f"{nullity}-dimensional family of M_a after normalization")
    if residual > tol:
        raise NoSolution(f"singular-part matching inconsistent, residual {residual:.3g}")
    # the same solve with jets from a smaller contour certifies the coefficients
    radius_check = 0.0
    if depth > 0:
        r2 = 0.6 * default_radius(target, P)
        rows2, rhs2 = matching(r2)
        A2 = np.vstack(rows2)
        b2 = np.concatenate(rhs2)
        radius_check = float(np.max(np.abs(A2 @ c - b2))) / bscale
    Mf = basis.combination(c)
    Mf.kind = vkind
    info = {"kind": vkind.label, "space_expected_dimension": basis.expected_dimension}
    if normalization == "inner":
        info["normalization_note"] = "only the inner block is normalized at P0 for sp kinds"
    return MaResult(Mf, c, residual, radius_check, nullity, A.shape[0], dim, sv, normalization, a,
                    P0, depth, info)


def _n_zero(kind, T, lat):
    """``N^D`` for ``D = 0``: a single auxiliary simple pole is not allowed,
    so the space is spanned by fields holomorphic away from the Tyurin points."""
    return solve_constrained_space(kind, Divisor([]), T, "N", lat)


# ---------------------------------------------------------------------------
# Calogero-Moser gauge


def cm_gauge_constant(L: MatrixField, M: MatrixField, T: TyurinData, center: complex = 0j):
    """Constant ``C`` keeping ``M + C`` inside the gauge of the gl CM matrix.

    Conditions: ``alpha_s = e_s`` stays fixed, i.e. the regular term
    ``(M + C)_0`` at each ``gamma_s`` maps ``e_s`` into its own span; the
    residue of ``L`` at ``center`` stays constant, i.e. the residue of
    ``[L, M + C]`` there vanishes; ``tr C = 0``.  Returns ``(C, residual)``.
    """
    n = L.size
    R = expand_at(commutator_field(L, M), center, -1, -1).coeff(-1)
    F = expand_at(L, center, -1, -1).coeff(-1)
    M0 = [expand_at(M, g, 0, 0).coeff(0) for g in T.points]
    cols = []
    for i in range(n * n):
        E = np.zeros(n * n, dtype=complex)
        E[i] = 1
        E = E.reshape(n, n)
        parts = [(F @ E - E @ F).ravel()]
        for s, a in enumerate(T.alphas):
            parts.append(_transverse(E @ a, a))
        parts.append([np.trace(E)])
        cols.append(np.concatenate(parts))
    A = np.array(cols).T
    rhs = [-R.ravel()]
    for s, a in enumerate(T.alphas):
        rhs.append(-_transverse(M0[s] @ a, a))
    rhs.append([0.0])
    b = np.concatenate(rhs)
    x, *_ = np.linalg.lstsq(A, b, rcond=None)
    res = float(np.max(np.abs(A @ x - b))) / max(1.0, float(np.max(np.abs(b))))
    return x.reshape(n, n), res


def _transverse(v, a):
    """Component of ``v`` orthogonal to unit vector ``a``."""
    a = a / np.linalg.norm(a)
    return v - a * (np.conj(a) @ v)


def shifted(M: MatrixField, C: np.ndarray) -> MatrixField:
    def ev(z):
        V = M.sample(np.atleast_1d(np.asarray(z, dtype=complex))) + C
        return V[0] if np.ndim(z) == 0 else V
    return MatrixField(ev, M.size, list(M.declared_poles), M.kind, M.lattice, vectorized=True)


# ---------------------------------------------------------------------------
# verification


def _require_gl(c: CouplingData):
    if c.kind != "gl":
        raise ValueError("flow verification in CM coordinates is implemented for the gl system")


def _hamiltonian_for(c: CouplingData, a: HierarchyIndex):
    if (a.P, a.k, a.m) == (0j, 1, 1):
        return ClosedFormHamiltonian(c)
    return ResidueHamiltonian(c, a.k, a.m, a.P)


def default_z_samples(s: PhaseState, count: int = 10, seed: int = 0, min_dist: float = 0.1):
    from .laxspace.spaces import sample_points
    rng = np.random.default_rng(seed)
    poles = [(0j, 1)] + [(q, 1) for q in s.q]
    return sample_points(s.lattice, rng, count, poles, min_dist)


@dataclass
class LaxFlowReport:
    dts: list
    deviations: list
    literal_deviations: list
    orders: list
    gauge_residual: float
    ma: MaResult
    tol: float
    passed: bool

    def to_dict(self) -> dict:
        return {"dts": self.dts, "deviations": self.deviations,
                "literal_deviations": self.literal_deviations, "orders": self.orders,
                "gauge_residual": self.gauge_residual, "tol": self.tol, "passed": self.passed,
                "ma": self.ma.to_dict()}


def verify_lax_flow(s: PhaseState, c: CouplingData, a: HierarchyIndex, dt: float = 1e-3,
                    z_samples=None, tol: float = 1e-6, max_halvings: int = 8, P0: complex = DEFAULT_P0,
                    min_order: float = 1.7) -> LaxFlowReport:
    """Central difference of ``L`` along the flow against ``[L, M_a + C]``.

    ``dt`` is halved until the relative deviation is at most ``tol`` (at
    least three values are always taken so the convergence order is
    measured).  ``literal_deviations`` are the same differences with
    ``C = 0``.
    """
    _require_gl(c)
    Lf = lax_field(s, c)
    T = tyurin_from_lax(s, c)
    ma = construct_ma(Lf, a, T, P0)
    C, gres = cm_gauge_constant(Lf, ma.field, T)
    zs = np.asarray(default_z_samples(s) if z_samples is None else z_samples, dtype=complex)
    H = _hamiltonian_for(c, a)
    Lz = lax_matrix(s, c, zs)
    Mz = ma.field.sample(zs)
    com_lit = Lz @ Mz - Mz @ Lz
    Mg = Mz + C
    com = Lz @ Mg - Mg @ Lz
    scale = float(np.max(np.abs(com)))
    dts, devs, lits = [], [], []
    h = dt
    for i in range(max_halvings + 1):
        sp = flow_map(s, H, h, h, LAX_ORIENTATION)
        sm = flow_map(s, H, -h, h, LAX_ORIENTATION)
        dL = (lax_matrix(sp, c, zs) - lax_matrix(sm, c, zs)) / (2 * h)
        dts.append(h)
        devs.append(float(np.max(np.abs(dL - com))) / scale)
        lits.append(float(np.max(np.abs(dL - com_lit))) / scale)
        if devs[-1] <= tol and len(devs) >= 3:
            break
        h /= 2
    orders = [float(np.log2(devs[i] / devs[i + 1])) for i in range(len(devs) - 1)]
    passed = devs[-1] <= tol and gres < 1e-8 and all(o >= min_order for o in orders[:2])
    return LaxFlowReport(dts, devs, lits, orders, gres, ma, tol, passed)


@dataclass
class TyurinDynamicsReport:
    qdot_flow: np.ndarray
    qdot_predicted: np.ndarray
    deviation: float
    alpha_residual: float
    dt: float
    tol: float
    passed: bool

    def to_dict(self) -> dict:
        enc = lambda v: [[x.real, x.imag] for x in v]  # noqa: E731
        return {"qdot_flow": enc(self.qdot_flow), "qdot_predicted": enc(self.qdot_predicted),
                "deviation": self.deviation, "alpha_residual": self.alpha_residual,
                "dt": self.dt, "tol": self.tol, "passed": self.passed}


def verify_tyurin_dynamics(s: PhaseState, c: CouplingData, a: HierarchyIndex, dt: float = 1e-4,
                           tol: float = 1e-6, P0: complex = DEFAULT_P0) -> TyurinDynamicsReport:
    """Compare ``q_dot_i`` along the flow with ``-mu_i^t sigma alpha_i`` fitted from ``M_a``.

    ``alpha_residual`` measures how far ``(M_a + C)_0`` at ``q_i`` is from
    having ``e_i`` as an eigenvector, i.e. the ``alpha_dot = 0`` equation.
    """
    _require_gl(c)
    Lf = lax_field(s, c)
    T = tyurin_from_lax(s, c)
    ma = construct_ma(Lf, a, T, P0)
    C, _ = cm_gauge_constant(Lf, ma.field, T)
    kind = T.kind
    pred = []
    ares = 0.0
    for g, al in zip(T.points, T.alphas):
        rec = fit_point(ma.field, g, al, kind, "M", 1e-8)
        pred.append(-(rec.fitted["mu"] @ kind.sigma @ al))
        M0 = expand_at(ma.field, g, 0, 0).coeff(0) + C
        ares = max(ares, float(np.max(np.abs(_transverse(M0 @ al, al)))) / max(1.0, float(np.max(np.abs(M0)))))
    pred = np.array(pred)
    H = _hamiltonian_for(c, a)

    def central(h):
        sp = flow_map(s, H, h, h, LAX_ORIENTATION)
        sm = flow_map(s, H, -h, h, LAX_ORIENTATION)
        return (sp.q - sm.q) / (2 * h)
    # Richardson combination of steps dt and dt/2 removes the dt^2 term
    qdot = (4 * central(dt / 2) - central(dt)) / 3
    dev = float(np.max(np.abs(qdot - pred))) / max(1.0, float(np.max(np.abs(qdot))))
    return TyurinDynamicsReport(qdot, pred, dev, ares, dt, tol, dev <= tol and ares <= 1e-8)


def involution_check(s: PhaseState, c: CouplingData, indices, h: float = 1e-3, kind: str | None = None):
    """Pairwise canonical brackets of residue Hamiltonians.

    Returns a list of ``{a, b, bracket, scale, relative}`` records.
    """
    Hs = [(a, ResidueHamiltonian(c, a.k, a.m, a.P)) for a in indices]
    out = []
    for i in range(len(Hs)):
        for j in range(i + 1, len(Hs)):
            br, sc = poisson_bracket(Hs[i][1], Hs[j][1], s, h, True, kind or c.kind)
            out.append({"a": Hs[i][0].to_dict(), "b": Hs[j][0].to_dict(), "bracket": [br.real, br.imag],
                        "scale": sc, "relative": abs(br) / max(sc, 1e-300)})
    return out


def zero_curvature_static(ma: MaResult, mb: MaResult, T: TyurinData, tol: float = 1e-8) -> dict:
    """Frozen-state check of the principal part of ``[M_a, M_b]`` at each ``gamma``.

    At a Tyurin point ``M = alpha mu^t sigma / w + O(1)``, so the double pole
    of ``[M_a, M_b]`` is ``alpha w^t sigma`` with ``w = (mu_a^t sigma alpha)
    mu_b - (mu_b^t sigma alpha) mu_a``.  Moving the point with velocity
    ``-mu^t sigma alpha`` produces exactly the opposite double pole in
    ``d_a M_b - d_b M_a``.  Reported: the largest mismatch of that
    cancellation and of the vanishing of orders below ``-2``.
    """
    kind = ma.field.kind if isinstance(ma.field.kind, AlgebraKind) else T.kind
    if kind.epsilon != 0:
        raise ValueError("the static zero-curvature check is implemented for gl kinds")
    cf = commutator_field(ma.field, mb.field)
    s = kind.sigma
    worst_pair, worst_high = 0.0, 0.0
    for g, al in zip(T.points, T.alphas):
        ra = fit_point(ma.field, g, al, kind, "M", tol)
        rb = fit_point(mb.field, g, al, kind, "M", tol)
        mua, mub = ra.fitted["mu"], rb.fitted["mu"]
        jet = expand_at(cf, g, -4, -2)
        va, vb = -(mua @ s @ al), -(mub @ s @ al)
        time_part = va * np.outer(al, mub @ s) - vb * np.outer(al, mua @ s)
        scale = max(1.0, float(np.max(np.abs(jet.coeff(-2)))), float(np.max(np.abs(time_part))))
        worst_pair = max(worst_pair, float(np.max(np.abs(jet.coeff(-2) + time_part))) / scale)
        worst_high = max(worst_high, float(max(np.max(np.abs(jet.coeff(k))) for k in (-4, -3))) / scale)
    return {"double_pole_cancellation": worst_pair, "higher_orders": worst_high, "tol": tol,
            "passed": worst_pair <= tol and worst_high <= tol}


def m_constraint_report(ma: MaResult, T: TyurinData, tol: float = 1e-8):
    """M-operator constraints of the constructed ``M_a`` (embedded Tyurin data)."""
    Te = T.embedded() if T.kind.diamond() != T.kind else T
    return check_m_constraints(ma.field, Te, tol)
