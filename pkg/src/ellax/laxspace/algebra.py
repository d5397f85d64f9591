"""Matrix Lie algebras used as value algebras of Lax and M-operators.

Each algebra is described by its bilinear-form matrix ``sigma`` and the
sign ``epsilon`` that enters the residue ansatz ``(a b^t + eps b a^t) sigma``:

===========  ========  ===================================================
tag          epsilon   sigma
===========  ========  ===================================================
gl, sl, s    0         identity
so(2n)       -1        ``[[0, E], [E, 0]]``
so(2n+1)     -1        ``diag([[0, E], [E, 0]], 1)``
sp(2n)       +1        ``[[0, E], [-E, 0]]``
tsp(2n)      +1        ``[[0, 0, 1], [0, J, 0], [-1, 0, 0]]``, size 2n+2
===========  ========  ===================================================

``tsp(2n)`` consists of the ``sp(2n+2)`` matrices with zero first column and
zero last row.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

_TAGS = ("gl", "sl", "s", "so", "sp", "tsp")


def _sympl(n: int) -> np.ndarray:
    e = np.eye(n)
    z = np.zeros((n, n))
    return np.block([[z, e], [-e, z]])


def _orth_even(n: int) -> np.ndarray:
    e = np.eye(n)
    z = np.zeros((n, n))
    return np.block([[z, e], [e, z]])


@dataclass(frozen=True)
class AlgebraKind:
    """A classical matrix algebra together with its form.

    Parameters
    ----------
    tag : {'gl', 'sl', 's', 'so', 'sp', 'tsp'}
    p : int
        Size of the matrices.  For ``sp`` and ``tsp`` use :meth:`from_label`
        or pass ``p`` directly (``2n`` and ``2n+2`` respectively).
    """

    tag: str
    p: int
    _basis: np.ndarray | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if self.tag not in _TAGS:
            raise ValueError(f"unknown algebra tag {self.tag!r}")
        if self.tag == "sp" and self.p % 2:
            raise ValueError("sp needs even size")
        if self.tag == "tsp" and (self.p % 2 or self.p < 4):
            raise ValueError("tsp(2n) has size 2n+2 >= 4")
        if self.p < 1:
            raise ValueError("size must be positive")

    @classmethod
    def from_label(cls, label: str) -> "AlgebraKind":
        """Parse ``'gl(3)'``, ``'so(4)'``, ``'sp(2)'``; ``'tsp(2n)'`` has size ``2n+2``."""
        m = re.fullmatch(r"\s*([a-z]+)\s*\(\s*(\d+)\s*\)\s*", label)
        if not m or m.group(1) not in _TAGS:
            raise ValueError(f"cannot parse algebra label {label!r}")
        tag, k = m.group(1), int(m.group(2))
        return cls(tag, k + 2 if tag == "tsp" else k)

    @property
    def label(self) -> str:
        return f"{self.tag}({self.p - 2 if self.tag == 'tsp' else self.p})"

    @property
    def n(self) -> int:
        """Rank parameter: ``p`` for gl/sl/s, ``p // 2`` for so/sp, ``(p-2)/2`` for tsp."""
        if self.tag in ("so", "sp"):
            return self.p // 2
        if self.tag == "tsp":
            return (self.p - 2) // 2
        return self.p

    @property
    def epsilon(self) -> int:
        return {"so": -1, "sp": 1, "tsp": 1}.get(self.tag, 0)

    @cached_property
    def sigma(self) -> np.ndarray:
        p, tag = self.p, self.tag
        if tag == "so":
            h = p // 2
            s = np.zeros((p, p))
            s[: 2 * h, : 2 * h] = _orth_even(h)
            if p % 2:
                s[-1, -1] = 1.0
            return s
        if tag == "sp":
            return _sympl(p // 2)
        if tag == "tsp":
            s = np.zeros((p, p))
            s[0, -1] = 1.0
            s[-1, 0] = -1.0
            s[1:-1, 1:-1] = _sympl((p - 2) // 2)
            return s
        return np.eye(p)

    def conditions(self, X: np.ndarray) -> np.ndarray:
        """Stacked linear membership residuals of ``X`` (zero iff ``X`` is in the algebra)."""
        X = np.asarray(X)
        tag = self.tag
        parts = []
        if tag in ("so", "sp", "tsp"):
            s = self.sigma
            parts.append((X.T @ s + s @ X).ravel())
        if tag == "tsp":
            parts.append(X[:, 0])
            parts.append(X[-1, :])
        if tag == "sl":
            parts.append(np.atleast_1d(np.trace(X)))
        if tag == "s":
            parts.append((X - np.trace(X) / self.p * np.eye(self.p)).ravel())
        if not parts:
            return np.zeros(1, dtype=complex)
        return np.concatenate(parts)

    def membership_residual(self, X: np.ndarray) -> float:
        X = np.asarray(X)
        r = self.conditions(X)
        return float(np.max(np.abs(r))) / max(1.0, float(np.max(np.abs(X))))

    @cached_property
    def basis(self) -> np.ndarray:
        """Orthonormal (Frobenius) real basis, shape ``(dim, p, p)``."""
        p = self.p
        rows = []
        for k in range(p * p):
            e = np.zeros(p * p)
            e[k] = 1.0
            rows.append(np.real(self.conditions(e.reshape(p, p))))
        A = np.array(rows).T
        _, s, vh = np.linalg.svd(A)
        tol = 1e-10 * max(1.0, s[0] if s.size else 1.0)
        rank = int(np.sum(s > tol))
        null = vh[rank:]
        # roundoff in structurally vanishing entries would later be mistaken for conditions
        null[np.abs(null) < 1e-13] = 0.0
        return null.reshape(-1, p, p)

    @property
    def dim(self) -> int:
        return self.basis.shape[0]

    def expected_dim(self) -> int:
        p, n, tag = self.p, self.n, self.tag
        return {"gl": p * p, "sl": p * p - 1, "s": 1, "so": p * (p - 1) // 2,
                "sp": n * (2 * n + 1), "tsp": (2 * n + 1) * (n + 1)}[tag]

    def coordinates(self, X: np.ndarray) -> np.ndarray:
        """Coefficients of ``X`` in :attr:`basis` (least squares)."""
        B = self.basis.reshape(self.dim, -1).T
        c, *_ = np.linalg.lstsq(B.astype(complex), np.asarray(X, dtype=complex).ravel(), rcond=None)
        return c

    def random_element(self, rng: np.random.Generator) -> np.ndarray:
        c = rng.standard_normal(self.dim) + 1j * rng.standard_normal(self.dim)
        return np.tensordot(c, self.basis, axes=1)

    # -- companion algebra for M-operators and the standard embedding --

    def diamond(self) -> "AlgebraKind":
        """Value algebra of the M-operators paired with this kind."""
        if self.tag in ("gl", "sl"):
            return AlgebraKind("gl", self.p)
        if self.tag == "so":
            return AlgebraKind("so", self.p + 1 if self.p % 2 == 0 else self.p)
        if self.tag == "sp":
            return AlgebraKind("tsp", self.p + 2)
        return self

    def embed(self, X: np.ndarray) -> np.ndarray:
        """Embed a matrix (or stack) of this kind into :meth:`diamond`."""
        X = np.asarray(X)
        target = self.diamond()
        if target.p == self.p:
            return X
        out = np.zeros(X.shape[:-2] + (target.p, target.p), dtype=np.result_type(X, float))
        if self.tag == "so":
            out[..., : self.p, : self.p] = X
        else:
            out[..., 1:-1, 1:-1] = X
        return out

    def embed_vector(self, a: np.ndarray) -> np.ndarray:
        target = self.diamond()
        a = np.asarray(a)
        if target.p == self.p:
            return a
        out = np.zeros(target.p, dtype=np.result_type(a, float))
        if self.tag == "so":
            out[: self.p] = a
        else:
            out[1:-1] = a
        return out

    def inner_block(self, X: np.ndarray) -> np.ndarray:
        """Inverse of :meth:`embed` on the embedded block (drops the border)."""
        X = np.asarray(X)
        if self.diamond().p == self.p:
            return X
        if self.tag == "so":
            return X[..., : self.p, : self.p]
        return X[..., 1:-1, 1:-1]

    def to_dict(self) -> dict:
        return {"tag": self.tag, "p": self.p, "label": self.label}
