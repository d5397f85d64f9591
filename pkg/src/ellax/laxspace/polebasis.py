"""Explicit scalar elliptic functions with prescribed poles.

For an effective pole budget ``sum_Q m_Q Q`` of degree ``N >= 1`` on a
genus-one curve the Riemann-Roch space has dimension ``N``.  A spanning
family is

* the constant ``1``;
* ``wp^(j)(z - Q)`` for ``0 <= j <= m_Q - 2`` (pole of order ``j + 2`` at ``Q``);
* ``zeta(z - Q) - zeta(z - Q0)`` for every allowed pole ``Q != Q0``, where
  ``Q0`` is the first allowed pole (quasi-periods cancel in the difference).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..elliptic import Lattice, wp_derivative, zeta
from ..errors import DegenerateConfiguration
from ..localfield import _lattice_distance


@dataclass(frozen=True)
class PoleFunction:
    """One scalar building block.

    ``kind`` is ``'const'``, ``'wp'`` (``wp^(order-2)(z - center)``) or
    ``'zeta'`` (``zeta(z - center) - zeta(z - anchor)``).
    """

    kind: str
    center: complex = 0j
    order: int = 0
    anchor: complex = 0j

    def __call__(self, z, lat: Lattice) -> np.ndarray:
        z = np.asarray(z, dtype=complex)
        if self.kind == "const":
            return np.ones_like(z)
        if self.kind == "wp":
            return np.asarray(wp_derivative(z - self.center, lat, self.order - 2))
        return np.asarray(zeta(z - self.center, lat)) - np.asarray(zeta(z - self.anchor, lat))

    @property
    def poles(self) -> list[tuple[complex, int]]:
        if self.kind == "const":
            return []
        if self.kind == "wp":
            return [(self.center, self.order)]
        return [(self.center, 1), (self.anchor, 1)]

    def to_dict(self) -> dict:
        d = {"kind": self.kind}
        if self.kind != "const":
            d["center"] = [self.center.real, self.center.imag]
            d["order"] = self.order
        if self.kind == "zeta":
            d["anchor"] = [self.anchor.real, self.anchor.imag]
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "PoleFunction":
        c = complex(*d.get("center", (0.0, 0.0)))
        a = complex(*d.get("anchor", (0.0, 0.0)))
        return cls(d["kind"], c, int(d.get("order", 0)), a)


def merge_budget(budget, lat: Lattice | None = None, tol: float = 1e-9) -> list[tuple[complex, int]]:
    """Combine ``(point, order)`` pairs, adding orders at coincident points."""
    out: list[list] = []
    for q, m in budget:
        q = complex(q)
        for item in out:
            if float(_lattice_distance(np.array([q - item[0]]), lat)[0]) < tol:
                item[1] += int(m)
                break
        else:
            out.append([q, int(m)])
    return [(q, m) for q, m in out if m > 0]


def build_pole_basis(budget, lat: Lattice, *, strict: bool = True) -> list[PoleFunction]:
    """Spanning family for functions with poles bounded by ``budget``.

    Parameters
    ----------
    budget : sequence of (complex, int)
        Allowed poles and their maximal orders.
    strict : bool
        Raise :class:`DegenerateConfiguration` when two listed points
        coincide modulo the lattice instead of merging them.
    """
    pts = [(complex(q), int(m)) for q, m in budget if int(m) > 0]
    if strict:
        for i in range(len(pts)):
            for j in range(i):
                if float(_lattice_distance(np.array([pts[i][0] - pts[j][0]]), lat)[0]) < 1e-9:
                    raise DegenerateConfiguration(
                        f"allowed poles {pts[j][0]} and {pts[i][0]} coincide modulo the lattice")
    else:
        pts = merge_budget(pts, lat)
    if not pts:
        raise DegenerateConfiguration("pole budget must have degree >= 1")
    fam = [PoleFunction("const")]
    q0 = pts[0][0]
    for q, m in pts:
        for order in range(2, m + 1):
            fam.append(PoleFunction("wp", q, order))
        if q != q0:
            fam.append(PoleFunction("zeta", q, 1, q0))
    return fam


def basis_poles(fam) -> list[tuple[complex, int]]:
    """Union of pole sets of a family, with maximal orders."""
    acc: dict[complex, int] = {}
    for f in fam:
        for q, m in f.poles:
            acc[q] = max(acc.get(q, 0), m)
    return list(acc.items())


def evaluate_family(fam, z, lat: Lattice) -> np.ndarray:
    """Values ``E[i, b] = fam[b](z[i])`` for a 1-d array of points."""
    z = np.asarray(z, dtype=complex).ravel()
    return np.stack([f(z, lat) for f in fam], axis=-1)


def family_rank(fam, lat: Lattice, rng: np.random.Generator, samples: int | None = None) -> int:
    """Numerical rank of the family sampled at random generic points."""
    k = len(fam)
    samples = samples or 3 * k + 4
    w1, w3 = lat.periods
    z = rng.uniform(-0.5, 0.5, samples) * w1 + rng.uniform(-0.5, 0.5, samples) * w3
    E = evaluate_family(fam, z, lat)
    E = E / np.maximum(np.max(np.abs(E), axis=0), 1e-300)
    s = np.linalg.svd(E, compute_uv=False)
    return int(np.sum(s > 1e-10 * s[0]))
