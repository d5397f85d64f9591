"""Tyurin data, divisors and their random generic sampling."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..elliptic import Lattice
from ..errors import DegenerateConfiguration
from ..localfield import _lattice_distance
from .algebra import AlgebraKind

ISOTROPY_TOL = 1e-12


@dataclass
class TyurinData:
    """Marked points ``gamma_s`` with direction vectors ``alpha_s``.

    The vectors are projective; they are stored with unit Euclidean norm.
    """

    points: list
    alphas: list
    kind: AlgebraKind

    def __post_init__(self):
        self.points = [complex(g) for g in self.points]
        self.alphas = [np.asarray(a, dtype=complex) for a in self.alphas]
        if len(self.points) != len(self.alphas):
            raise ValueError("points and alphas differ in length")
        normed = []
        for a in self.alphas:
            if a.shape != (self.kind.p,):
                raise ValueError(f"alpha of shape {a.shape} for size {self.kind.p}")
            nrm = np.linalg.norm(a)
            if nrm == 0:
                raise DegenerateConfiguration("alpha must be nonzero")
            normed.append(a / nrm)
        self.alphas = normed

    def __len__(self):
        return len(self.points)

    def validate(self, lat: Lattice | None = None) -> None:
        """Check distinctness and the kind-specific shape of each alpha."""
        for i in range(len(self.points)):
            for j in range(i):
                d = _lattice_distance(np.array([self.points[i] - self.points[j]]), lat)[0]
                if d < 1e-9:
                    raise DegenerateConfiguration("Tyurin points must be distinct")
        for a in self.alphas:
            if self.kind.tag == "so" and abs(a @ self.kind.sigma @ a) > ISOTROPY_TOL:
                raise DegenerateConfiguration("so-kind alpha must be isotropic")
            if self.kind.tag == "tsp" and abs(a[-1]) > ISOTROPY_TOL:
                raise DegenerateConfiguration("tsp-kind alpha must have zero last entry")

    def embedded(self) -> "TyurinData":
        """The same data viewed in the companion M-operator algebra."""
        k = self.kind
        return TyurinData(self.points, [k.embed_vector(a) for a in self.alphas], k.diamond())

    def to_dict(self) -> dict:
        return {"kind": self.kind.label,
                "points": [[g.real, g.imag] for g in self.points],
                "alphas": [[[x.real, x.imag] for x in a] for a in self.alphas]}

    @classmethod
    def from_dict(cls, d: dict) -> "TyurinData":
        kind = AlgebraKind.from_label(d["kind"])
        pts = [complex(*g) for g in d["points"]]
        als = [np.array([complex(*x) for x in a]) for a in d["alphas"]]
        return cls(pts, als, kind)


@dataclass
class Divisor:
    """Effective divisor ``sum m_i P_i``."""

    points: list = field(default_factory=list)

    def __post_init__(self):
        self.points = [(complex(q), int(m)) for q, m in self.points]
        if any(m < 1 for _, m in self.points):
            raise ValueError("multiplicities must be positive")

    @property
    def degree(self) -> int:
        return sum(m for _, m in self.points)

    def to_dict(self) -> dict:
        return {"points": [[[q.real, q.imag], m] for q, m in self.points]}


def tyurin_count(kind: AlgebraKind, genus: int = 1) -> int:
    """Number of Tyurin points: ``n g`` for gl/sl/so, ``(n + 1) g`` for sp and tsp."""
    if kind.tag in ("sp", "tsp"):
        return (kind.n + 1) * genus
    return kind.n * genus


def random_alpha(kind: AlgebraKind, rng: np.random.Generator, generic_border: bool = True) -> np.ndarray:
    """Random direction vector obeying the kind constraints.

    For ``so`` kinds the vector is made isotropic for ``sigma``; for ``tsp``
    the last entry is zero (and the first is random unless
    ``generic_border`` is false).
    """
    p = kind.p
    a = rng.standard_normal(p) + 1j * rng.standard_normal(p)
    if kind.tag == "so":
        h = p // 2
        x, y = a[:h], a[h:2 * h]
        c = a[2 * h] if p % 2 else 0
        # x.y + c^2/2 = 0 makes alpha^t sigma alpha = 2 x.y + c^2 vanish
        y = y - ((x @ y) + c * c / 2) / (x @ x) * x
        a = np.concatenate([x, y, [c]] if p % 2 else [x, y])
    elif kind.tag == "tsp":
        a[-1] = 0
        if not generic_border:
            a[0] = 0
    return a / np.linalg.norm(a)


def random_points(lat: Lattice, count: int, rng: np.random.Generator, avoid=(),
                  min_sep: float = 0.12, max_tries: int = 10000) -> list[complex]:
    """Points in the centred cell separated (mod lattice) by ``min_sep * min_period``.

    Points in ``avoid`` are kept at the same separation, and so are their
    negatives when those are listed too.
    """
    w1, w3 = lat.periods
    sep = min_sep * lat.min_period
    chosen: list[complex] = []
    taken = [complex(a) for a in avoid]
    for _ in range(max_tries):
        if len(chosen) == count:
            break
        z = complex(rng.uniform(-0.5, 0.5) * w1 + rng.uniform(-0.5, 0.5) * w3)
        if all(_lattice_distance(np.array([z - t]), lat)[0] > sep for t in taken + chosen):
            chosen.append(z)
    if len(chosen) < count:
        raise DegenerateConfiguration("could not place separated random points")
    return chosen


def random_tyurin(kind: AlgebraKind, lat: Lattice, rng: np.random.Generator, count: int | None = None,
                  avoid=(), generic_border: bool = True) -> TyurinData:
    """Generic random Tyurin data of the default size for ``kind``."""
    count = tyurin_count(kind) if count is None else count
    pts = random_points(lat, count, rng, avoid)
    als = [random_alpha(kind, rng, generic_border) for _ in range(count)]
    return TyurinData(pts, als, kind)
