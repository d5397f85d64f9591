"""Laurent jets and residues from discrete Cauchy integrals on circles.

A field is sampled on ``z_j = c + r exp(2 pi i j / N)``; the trapezoid rule
for ``(1/2 pi i) oint f(z) (z - c)^(-k-1) dz`` is a discrete Fourier
transform of the samples, so every coefficient in ``[-N/2, N/2)`` comes out
of a single FFT.  Accuracy is spectral as long as no other singularity lies
in the annulus used for sampling.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .elliptic import Lattice, reduce_to_cell, TOL_POLE
from .errors import ContourHitsPole, NoisyJet

DEFAULT_SAMPLES = 256
DEFAULT_TOL = 1e-9
RADIUS_CAP = 0.25


@dataclass
class MatrixField:
    """A meromorphic function of the spectral parameter.

    Parameters
    ----------
    evaluate : callable
        Maps a complex scalar to an array of fixed shape (``(p, p)`` for
        matrix fields, ``()`` for scalars, or any stack shape).  When
        ``vectorized`` is true it must also accept a 1-d array of points and
        return an array with that leading axis.
    size : int
        Matrix size ``p`` (0 for a scalar or stacked field).
    declared_poles : list of (complex, int)
        Pole locations and maximal orders.  Poles are understood modulo the
        lattice when ``lattice`` is given.
    kind : AlgebraKind or None
        Value algebra, used for membership checks.
    lattice : Lattice or None
    """

    evaluate: Callable
    size: int = 0
    declared_poles: list = field(default_factory=list)
    kind: object = None
    lattice: Lattice | None = None
    vectorized: bool = False

    def sample(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=complex).ravel()
        if self.vectorized:
            return np.asarray(self.evaluate(z), dtype=complex)
        return np.stack([np.asarray(self.evaluate(complex(zj)), dtype=complex) for zj in z])

    def __call__(self, z):
        return np.asarray(self.evaluate(z), dtype=complex)

    def pole_distance(self, z, exclude=None) -> np.ndarray:
        """Distance from each ``z`` to the nearest declared pole (mod lattice)."""
        z = np.asarray(z, dtype=complex).ravel()
        best = np.full(z.shape, np.inf)
        for q, _ in self.declared_poles:
            if exclude is not None and _same_point(q, exclude, self.lattice):
                continue
            best = np.minimum(best, _lattice_distance(z - q, self.lattice))
        return best


def _lattice_distance(d, lat):
    d = np.asarray(d, dtype=complex)
    if lat is None:
        return np.abs(d)
    d0, _, _ = reduce_to_cell(d, lat)
    return np.abs(d0)


def _same_point(a, b, lat, tol=1e-12) -> bool:
    return float(_lattice_distance(np.array([a - b]), lat)[0]) < tol


def scalar_field(fn: Callable, poles: Sequence = (), lattice=None) -> MatrixField:
    """Wrap a vectorized scalar function ``fn(z_array)`` as a field."""
    return MatrixField(fn, 0, list(poles), None, lattice, vectorized=True)


@dataclass
class LaurentJet:
    """Coefficients ``c_k`` of ``sum_k c_k (z - center)^k`` for ``min_order <= k <= max_order``."""

    center: complex
    min_order: int
    max_order: int
    coeffs: np.ndarray
    radius: float
    samples: int
    residual: float = 0.0

    def coeff(self, k: int) -> np.ndarray:
        if k < self.min_order or k > self.max_order:
            raise IndexError(f"order {k} outside [{self.min_order}, {self.max_order}]")
        return self.coeffs[k - self.min_order]

    def __getitem__(self, k: int) -> np.ndarray:
        return self.coeff(k)

    def evaluate(self, z) -> np.ndarray:
        """Truncated Laurent sum at ``z`` (scalar)."""
        w = complex(z) - self.center
        out = np.zeros(self.coeffs.shape[1:], dtype=complex)
        for i, k in enumerate(range(self.min_order, self.max_order + 1)):
            out = out + self.coeffs[i] * w**k
        return out


def default_radius(f: MatrixField, center: complex) -> float:
    """Half the distance to the nearest other pole, capped at a quarter period.

    Lattice translates of ``center`` itself count as other poles.
    """
    lat = f.lattice
    cap = RADIUS_CAP * lat.min_period if lat is not None else 0.25
    d = f.pole_distance(np.array([center]), exclude=center)[0]
    if lat is not None:
        d = min(d, lat.min_period)
    return float(min(0.5 * d, cap))


def expand_at(f: MatrixField, center: complex, min_order: int, max_order: int,
              radius: float | None = None, samples: int = DEFAULT_SAMPLES,
              tol: float = DEFAULT_TOL) -> LaurentJet:
    """Laurent jet of ``f`` at ``center`` by the trapezoid rule on a circle.

    The residual is the maximal error, relative to ``max |f|``, of the full
    ``samples``-mode reconstruction on a circle rotated by half a sample
    step; it measures aliasing from the truncated tail.

    Raises
    ------
    ContourHitsPole
        If a sample point comes within ``TOL_POLE`` (relative to the shortest
        period) of a declared pole, or another pole lies inside the circle.
    NoisyJet
        If the residual exceeds ``tol``.
    """
    if max_order < min_order:
        raise ValueError("max_order < min_order")
    if samples < 4 * (max_order - min_order + 1) or samples & (samples - 1):
        raise ValueError(f"samples={samples} must be a power of two >= 4*(orders)")
    center = complex(center)
    if radius is None:
        radius = default_radius(f, center)
    if not radius > 0:
        raise ContourHitsPole(f"no admissible radius at {center}")
    N = samples
    theta = 2 * np.pi * np.arange(N) / N
    ring = radius * np.exp(1j * theta)
    stagger = radius * np.exp(1j * (theta + np.pi / N))
    scale = f.lattice.min_period if f.lattice is not None else 1.0
    near = f.pole_distance(np.array([center]), exclude=center)[0]
    if near <= radius * (1 + 1e-12):
        raise ContourHitsPole(f"pole at distance {near:.3g} inside contour radius {radius:.3g}")
    both = np.concatenate([center + ring, center + stagger])
    if np.any(f.pole_distance(both) < TOL_POLE * scale):
        raise ContourHitsPole("contour sample within tolerance of a pole")
    vals = f.sample(both)
    on, off = vals[:N], vals[N:]
    fft = np.fft.fft(on, axis=0) / N
    # fft[k mod N] = c_k r^k for |k| < N/2
    ks = np.fft.fftfreq(N, 1.0 / N).astype(int)
    phase = np.exp(1j * np.pi * ks / N).reshape((N,) + (1,) * (vals.ndim - 1))
    rebuilt = np.fft.ifft(fft * phase, axis=0) * N
    denom = max(float(np.max(np.abs(vals))), 1e-300)
    residual = float(np.max(np.abs(rebuilt - off))) / denom
    orders = np.arange(min_order, max_order + 1)
    coeffs = np.stack([fft[k % N] / radius**k for k in orders])
    jet = LaurentJet(center, min_order, max_order, coeffs, float(radius), N, residual)
    if residual > tol:
        raise NoisyJet(f"jet residual {residual:.3g} exceeds {tol:.3g} at {center}")
    return jet


def residue_at(f: MatrixField, center: complex, **kwargs) -> np.ndarray:
    """Coefficient ``c_{-1}`` of the Laurent expansion at ``center``."""
    return expand_at(f, center, -1, -1, **kwargs).coeff(-1)
