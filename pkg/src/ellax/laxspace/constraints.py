"""Local conditions at Tyurin points, as linear equations in Laurent coefficients.

At a Tyurin point ``gamma`` with vector ``alpha`` an L-operator expands as

    L = L_{-2}/(z-gamma)^2 + L_{-1}/(z-gamma) + L_0 + L_1 (z-gamma) + ...

with ``L_{-2} = nu alpha alpha^t sigma`` (zero unless the kind is symplectic),
``L_{-1} = (alpha beta^t + eps beta alpha^t) sigma``, ``beta^t sigma alpha = 0``,
``L_0 alpha = kappa alpha`` and, for symplectic kinds, ``alpha^t sigma L_1 alpha = 0``.
M-operators obey the same pole-part relations with scalars ``lambda`` and
vectors ``mu``, no eigenvector condition, and the ``L_1`` condition for sp/tsp.

:func:`point_equations` turns these relations into blocks ``Ax x + Aaux aux``
where ``x`` parametrizes the field linearly (through the maps ``T_k`` sending
``x`` to the k-th coefficient) and ``aux`` collects the auxiliary scalars and
vectors.  The same blocks drive both the nullspace solver and the
least-squares checks on concrete fields.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..localfield import MatrixField, expand_at
from .algebra import AlgebraKind
from .tyurin import TyurinData

MEMBERSHIP_SAMPLES = 20


@dataclass
class Block:
    """Linear equation block ``Ax @ x + Aaux @ aux = 0``; ``order`` is the jet order involved."""

    name: str
    order: int
    Ax: np.ndarray
    Aaux: np.ndarray | None = None


@dataclass
class PointEquations:
    point: complex
    blocks: list
    aux: list  # (name, size)

    @property
    def n_aux(self) -> int:
        return sum(s for _, s in self.aux)

    def aux_offset(self, name: str) -> int:
        off = 0
        for nm, s in self.aux:
            if nm == name:
                return off
            off += s
        raise KeyError(name)


def _vec(T: np.ndarray) -> np.ndarray:
    """``(nx, p, p)`` linear map to a ``(p*p, nx)`` row block."""
    return T.reshape(T.shape[0], -1).T


def _residue_map(alpha, sigma, eps, support) -> np.ndarray:
    """Matrix of ``v -> vec((alpha v^t + eps v alpha^t) sigma)`` restricted to ``support``."""
    p = alpha.shape[0]
    cols = []
    a_s = alpha @ sigma
    for l in support:
        e = np.zeros(p, dtype=complex)
        e[l] = 1
        R = np.outer(alpha, e @ sigma) + eps * np.outer(e, a_s)
        cols.append(R.ravel())
    return np.array(cols).T.reshape(p * p, len(cols))


def point_equations(T: dict, alpha: np.ndarray, kind: AlgebraKind, role: str = "L", *,
                    support=None, gauge: bool | None = None, point: complex = 0j) -> PointEquations:
    """Equations at one Tyurin point.

    Parameters
    ----------
    T : dict
        Maps order ``k`` to an array ``(nx, p, p)``: the coefficient ``c_k``
        as a linear function of the unknowns.  Orders below ``-2`` must vanish.
    role : {'L', 'M'}
    support : sequence of int, optional
        Coordinates allowed to be nonzero in ``beta``/``mu``.  Defaults to
        all coordinates, or all but the last for ``tsp``.
    gauge : bool, optional
        Add ``conj(alpha) . beta = 0``; defaults to true when ``eps = -1``,
        where ``beta -> beta + t alpha`` leaves the residue unchanged.
    """
    alpha = np.asarray(alpha, dtype=complex)
    p = kind.p
    eps = kind.epsilon
    s = kind.sigma
    sp_like = kind.tag in ("sp", "tsp")
    if support is None:
        support = range(p - 1) if kind.tag == "tsp" else range(p)
    support = list(support)
    if gauge is None:
        gauge = eps == -1
    is_l = role == "L"
    names = ("nu", "beta", "kappa") if is_l else ("lambda", "mu", None)
    aux = []
    if sp_like:
        aux.append((names[0], 1))
    aux.append((names[1], len(support)))
    if is_l:
        aux.append(("kappa", 1))
    eq = PointEquations(complex(point), [], aux)
    n_aux = eq.n_aux
    nx = next(iter(T.values())).shape[0]

    def cols(name, mat):
        A = np.zeros((mat.shape[0], n_aux), dtype=complex)
        off = eq.aux_offset(name)
        A[:, off:off + mat.shape[1]] = mat
        return A

    for k in sorted(T):
        if k < -2 or (k == -2 and not sp_like):
            eq.blocks.append(Block(f"c{k}", k, _vec(T[k])))
    if -2 in T and sp_like:
        aat = np.outer(alpha, alpha @ s).ravel()[:, None]
        eq.blocks.append(Block("double_pole", -2, _vec(T[-2]), cols(names[0], -aat)))
    R = _residue_map(alpha, s, eps, support)
    eq.blocks.append(Block("residue", -1, _vec(T[-1]), cols(names[1], -R)))
    sa = (s @ alpha)[support]
    if is_l:
        eq.blocks.append(Block("beta_orthogonal", -1, np.zeros((1, nx), dtype=complex), cols("beta", sa[None, :])))
        Ta = np.einsum("xij,j->ix", T[0], alpha)
        eq.blocks.append(Block("eig", 0, Ta, cols("kappa", -alpha[:, None])))
    if gauge:
        eq.blocks.append(Block("gauge", -1, np.zeros((1, nx), dtype=complex),
                               cols(names[1], np.conj(alpha[support])[None, :])))
    if sp_like and 1 in T:
        row = np.einsum("i,xij,j->x", alpha @ s, T[1], alpha)[None, :]
        eq.blocks.append(Block("first_order", 1, row))
    return eq


# ---------------------------------------------------------------------------
# checks on concrete fields


@dataclass
class PointRecord:
    point: complex
    fitted: dict
    residuals: dict
    passed: bool

    def to_dict(self) -> dict:
        def enc(v):
            v = np.atleast_1d(np.asarray(v))
            return [[complex(x).real, complex(x).imag] for x in v]
        return {"point": [self.point.real, self.point.imag],
                "fitted": {k: enc(v) for k, v in self.fitted.items()},
                "residuals": dict(self.residuals), "passed": self.passed}


@dataclass
class ConstraintReport:
    role: str
    records: list = field(default_factory=list)
    membership_residual: float = 0.0
    tol: float = 1e-8
    passed: bool = True

    @property
    def max_residual(self) -> float:
        vals = [self.membership_residual] + [r for rec in self.records for r in rec.residuals.values()]
        return float(max(vals))

    def fitted(self, name: str) -> list:
        return [rec.fitted.get(name) for rec in self.records]

    def to_dict(self) -> dict:
        return {"role": self.role, "tol": self.tol, "passed": self.passed,
                "max_residual": self.max_residual,
                "membership_residual": self.membership_residual,
                "points": [r.to_dict() for r in self.records]}


def _declared_order(f: MatrixField, point: complex) -> int:
    from ..localfield import _same_point
    return max([m for q, m in f.declared_poles if _same_point(q, point, f.lattice)] or [0])


def fit_point(f: MatrixField, point: complex, alpha: np.ndarray, kind: AlgebraKind, role: str,
              tol: float, radius: float | None = None, **opts) -> PointRecord:
    """Fit the auxiliary data at one point and report per-equation residuals.

    Residuals are scaled by ``S r^(-k)`` for an order-``k`` equation, where
    ``S`` is the largest field entry on the contour of radius ``r``; this is
    the Cauchy bound on ``|c_k|``, so residuals measure violations relative to
    what the contour resolves.
    """
    lo = min(-3, -_declared_order(f, point))
    jet = expand_at(f, point, lo, 1, radius=radius, tol=max(tol, 1e-9))
    r = jet.radius
    S = max(float(max(np.max(np.abs(jet.coeffs[i])) * r ** k
                      for i, k in enumerate(range(lo, 2)))), 1e-300)
    T = {k: jet.coeff(k)[None] for k in range(lo, 2)}
    eq = point_equations(T, alpha, kind, role, point=point, **opts)
    rows, rhs, tags = [], [], []
    for b in eq.blocks:
        w = r ** b.order / S
        Aaux = b.Aaux if b.Aaux is not None else np.zeros((b.Ax.shape[0], eq.n_aux), dtype=complex)
        rows.append(w * Aaux)
        rhs.append(-w * b.Ax[:, 0])
        tags.extend([b.name] * b.Ax.shape[0])
    A = np.vstack(rows)
    y = np.concatenate(rhs)
    if eq.n_aux:
        aux, *_ = np.linalg.lstsq(A, y, rcond=None)
    else:
        aux = np.zeros(0, dtype=complex)
    res = np.abs(A @ aux - y)
    tags = np.array(tags)
    residuals = {}
    for b in eq.blocks:
        residuals[b.name] = float(np.max(res[tags == b.name])) if np.any(tags == b.name) else 0.0
    fitted = {}
    for name, size in eq.aux:
        off = eq.aux_offset(name)
        val = aux[off:off + size]
        if name in ("beta", "mu"):
            full = np.zeros(kind.p, dtype=complex)
            sup = opts.get("support")
            sup = list(sup) if sup is not None else (list(range(kind.p - 1)) if kind.tag == "tsp"
                                                    else list(range(kind.p)))
            full[sup] = val
            val = full
        fitted[name] = val if size > 1 or name in ("beta", "mu") else complex(val[0])
    passed = all(v <= tol for v in residuals.values())
    return PointRecord(complex(point), fitted, residuals, passed)


def _membership(f: MatrixField, kind: AlgebraKind, rng: np.random.Generator) -> float:
    lat = f.lattice
    if lat is None:
        z = rng.standard_normal(MEMBERSHIP_SAMPLES) + 1j * rng.standard_normal(MEMBERSHIP_SAMPLES)
    else:
        w1, w3 = lat.periods
        z = []
        while len(z) < MEMBERSHIP_SAMPLES:
            c = complex(rng.uniform(-0.5, 0.5) * w1 + rng.uniform(-0.5, 0.5) * w3)
            if f.pole_distance(np.array([c]))[0] > 0.05 * lat.min_period:
                z.append(c)
        z = np.array(z)
    vals = f.sample(z)
    return float(max(kind.membership_residual(v) for v in vals))


def _check(f, T: TyurinData, tol, role, seed, kind=None):
    kind = kind or T.kind
    rng = np.random.default_rng(seed)
    rep = ConstraintReport(role, tol=tol)
    for g, a in zip(T.points, T.alphas):
        rep.records.append(fit_point(f, g, a, kind, role, tol))
    rep.membership_residual = _membership(f, kind, rng)
    rep.passed = all(r.passed for r in rep.records) and rep.membership_residual <= tol
    return rep


def check_l_constraints(f: MatrixField, T: TyurinData, tol: float = 1e-8, seed: int = 0) -> ConstraintReport:
    """Fit ``nu, beta, kappa`` at every Tyurin point and test the L-operator relations.

    Never raises on violated relations; the report carries the residuals.
    """
    return _check(f, T, tol, "L", seed)


def check_m_constraints(f: MatrixField, T: TyurinData, tol: float = 1e-8, seed: int = 0) -> ConstraintReport:
    """Fit ``lambda, mu`` at every Tyurin point and test the M-operator relations."""
    return _check(f, T, tol, "M", seed)


def commutator_field(f1: MatrixField, f2: MatrixField) -> MatrixField:
    """Pointwise commutator ``[f1, f2]`` with the union of declared poles."""
    def ev(z):
        zz = np.atleast_1d(np.asarray(z, dtype=complex))
        a, b = f1.sample(zz), f2.sample(zz)
        out = a @ b - b @ a
        return out[0] if np.ndim(z) == 0 else out
    poles: dict = {}
    for q, m in list(f1.declared_poles) + list(f2.declared_poles):
        poles[q] = poles.get(q, 0) + m
    return MatrixField(ev, f1.size, list(poles.items()), f1.kind, f1.lattice, vectorized=True)


def commutator_closure(f1: MatrixField, f2: MatrixField, T: TyurinData, tol: float = 1e-8,
                       seed: int = 0) -> ConstraintReport:
    """Check that ``[f1, f2]`` is again an L-operator for the same Tyurin data."""
    return check_l_constraints(commutator_field(f1, f2), T, tol, seed)
