r"""Weierstrass elliptic functions on an arbitrary period lattice.

The lattice is generated by ``2*omega1`` and ``2*omega3`` with
``Im(omega3/omega1) > 0``.  All functions reduce the argument to the
fundamental cell centred at the origin and then sum the Fourier (q-)series
of the Jacobi theta representation

.. math::

    \sigma(z) = \frac{2\omega_1}{\pi} e^{\eta_1 z^2/(2\omega_1)}
                \frac{\vartheta_1(v)}{\vartheta_1'(0)},\qquad
    v = \frac{\pi z}{2\omega_1}.

Quasi-periodicity corrections are applied exactly after the series
evaluation, so ``sigma`` and ``zeta`` are valid on the whole plane.
Every evaluator accepts scalars or numpy arrays and returns the same shape.
"""

from __future__ import annotations

import cmath
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateLattice, PoleAtLatticePoint

TOL_TAU = 1e-6
TOL_POLE = 1e-8
NOME_WARN = 0.9
MAX_TERMS = 64
_REL_TERM = 1e-16


@dataclass(frozen=True)
class Lattice:
    """Period lattice with its modular data.

    Build instances with :func:`lattice_from_periods`; the invariants ``g2``,
    ``g3`` and the quasi-period ``eta1`` are filled in there.
    """

    omega1: complex
    omega3: complex
    tau: complex
    nome: complex
    g2: complex
    g3: complex
    eta1: complex
    _lam: np.ndarray = field(repr=False, compare=False)

    @property
    def eta3(self) -> complex:
        # Legendre relation eta1*omega3 - eta3*omega1 = i*pi/2
        return (self.eta1 * self.omega3 - 0.5j * math.pi) / self.omega1

    @property
    def periods(self) -> tuple[complex, complex]:
        return 2 * self.omega1, 2 * self.omega3

    @property
    def min_period(self) -> float:
        w1, w3 = self.periods
        return min(abs(w1), abs(w3), abs(w1 + w3), abs(w1 - w3))

    @property
    def discriminant(self) -> complex:
        return self.g2**3 - 27 * self.g3**2

    def e_roots(self) -> tuple[complex, complex, complex]:
        """Half-period values ``wp(omega1), wp(omega1+omega3), wp(omega3)``."""
        w1, w3 = self.omega1, self.omega3
        return (complex(wp(w1, self)), complex(wp(w1 + w3, self)), complex(wp(w3, self)))

    def wp(self, z):
        return wp(z, self)

    def wp_prime(self, z):
        return wp_prime(z, self)

    def zeta(self, z):
        return zeta(z, self)

    def sigma(self, z):
        return sigma(z, self)

    def to_dict(self) -> dict:
        return {"omega1": [self.omega1.real, self.omega1.imag],
                "omega3": [self.omega3.real, self.omega3.imag]}


def _lambert(q2: complex) -> np.ndarray:
    """Coefficients ``q2**n / (1 - q2**n)`` for ``n = 1..MAX_TERMS``."""
    n = np.arange(1, MAX_TERMS + 1)
    qn = q2 ** n
    return qn / (1.0 - qn)


def _truncated(coeffs: np.ndarray, weights: np.ndarray) -> complex:
    terms = weights * coeffs
    total = 0j
    for t in terms:
        total += t
        if abs(t) < _REL_TERM * abs(total):
            break
    return total


def lattice_from_periods(omega1: complex, omega3: complex) -> Lattice:
    """Return the lattice with half-periods ``omega1``, ``omega3``.

    Raises
    ------
    DegenerateLattice
        If ``Im(omega3/omega1) <= TOL_TAU``.
    """
    omega1, omega3 = complex(omega1), complex(omega3)
    if omega1 == 0:
        raise DegenerateLattice("omega1 must be nonzero")
    tau = omega3 / omega1
    if tau.imag <= TOL_TAU:
        raise DegenerateLattice(f"Im(tau) = {tau.imag:.3g} <= {TOL_TAU}; tau = {tau}")
    nome = cmath.exp(1j * math.pi * tau)
    if abs(nome) > NOME_WARN:
        warnings.warn(f"|nome| = {abs(nome):.4f} > {NOME_WARN}; q-series converge slowly "
                      f"(tau = {tau}); consider a reduced basis", RuntimeWarning, stacklevel=2)
    lam = _lambert(nome * nome)
    n = np.arange(1, MAX_TERMS + 1, dtype=float)
    e2 = 1 - 24 * _truncated(lam, n)
    e4 = 1 + 240 * _truncated(lam, n**3)
    e6 = 1 - 504 * _truncated(lam, n**5)
    k = math.pi / omega1
    g2 = k**4 / 12 * e4
    g3 = k**6 / 216 * e6
    eta1 = math.pi**2 / (12 * omega1) * e2
    lat = Lattice(omega1, omega3, tau, nome, complex(g2), complex(g3), complex(eta1), lam)
    if abs(lat.discriminant) <= 1e-14 * max(abs(g2) ** 3, abs(g3) ** 2, 1e-300):
        raise DegenerateLattice("vanishing discriminant")
    return lat


def reduce_to_cell(z, lat: Lattice):
    """Split ``z = z0 + 2*m*omega1 + 2*n*omega3`` with ``z0`` in the centred cell.

    Returns ``(z0, m, n)``; ``m`` and ``n`` are integer arrays (or ints for
    scalar input) obtained by rounding the real lattice coordinates.
    """
    za = np.asarray(z, dtype=complex)
    w1, w3 = lat.periods
    det = w1.real * w3.imag - w3.real * w1.imag
    x = (za.real * w3.imag - za.imag * w3.real) / det
    y = (w1.real * za.imag - w1.imag * za.real) / det
    m = np.rint(x)
    n = np.rint(y)
    z0 = za - m * w1 - n * w3
    if za.ndim == 0:
        return complex(z0), int(m), int(n)
    return z0, m.astype(int), n.astype(int)


def _prep(z, lat):
    za = np.asarray(z, dtype=complex)
    z0, m, n = reduce_to_cell(za.ravel(), lat)
    v = (math.pi / (2 * lat.omega1)) * z0
    return za.shape, z0, m, n, v


def _check_pole(z0, lat, name):
    if np.any(np.abs(z0) < TOL_POLE * lat.min_period):
        raise PoleAtLatticePoint(f"{name} evaluated at a lattice point")


def _fourier(v, coeffs, trig):
    """Sum ``coeffs[k-1] * trig(2 k v)`` until terms drop below the relative floor."""
    total = np.zeros_like(v)
    scale = None
    for k in range(1, MAX_TERMS + 1):
        term = coeffs[k - 1] * trig(2 * k * v)
        total = total + term
        if scale is None:
            scale = np.abs(total) + 1.0
        if np.all(np.abs(term) < _REL_TERM * (np.abs(total) + scale)):
            break
    return total


def _shape(out, shape):
    out = out.reshape(shape)
    return complex(out) if out.ndim == 0 else out


def wp(z, lat: Lattice):
    """Weierstrass ``wp(z)``."""
    shape, z0, _, _, v = _prep(z, lat)
    _check_pole(z0, lat, "wp")
    n = np.arange(1, MAX_TERMS + 1)
    k = math.pi / (2 * lat.omega1)
    s = np.sin(v)
    series = _fourier(v, n * lat._lam, np.cos)
    out = -lat.eta1 / lat.omega1 + k * k * (1.0 / (s * s) - 8 * series)
    return _shape(out, shape)


def wp_prime(z, lat: Lattice):
    """Derivative ``wp'(z)``."""
    shape, z0, _, _, v = _prep(z, lat)
    _check_pole(z0, lat, "wp_prime")
    n = np.arange(1, MAX_TERMS + 1)
    k = math.pi / (2 * lat.omega1)
    s = np.sin(v)
    series = _fourier(v, n * n * lat._lam, np.sin)
    out = k**3 * (-2 * np.cos(v) / s**3 + 16 * series)
    return _shape(out, shape)


def zeta(z, lat: Lattice):
    """Weierstrass ``zeta(z)``, with ``zeta(z + 2 omega1) = zeta(z) + 2 eta1``."""
    shape, z0, m, n, v = _prep(z, lat)
    _check_pole(z0, lat, "zeta")
    k = math.pi / (2 * lat.omega1)
    series = _fourier(v, lat._lam, np.sin)
    out = lat.eta1 * z0 / lat.omega1 + k * (np.cos(v) / np.sin(v) + 4 * series)
    out = out + 2 * m * lat.eta1 + 2 * n * lat.eta3
    return _shape(out, shape)


def _theta1_ratio(v, tau):
    """``theta1(v) / theta1'(0)`` by its rapidly convergent series."""
    num = np.zeros_like(v)
    den = 0j
    for j in range(MAX_TERMS):
        # q^{(j+1/2)^2} with q = exp(i pi tau); exponent taken directly, not via log(q)
        c = (-1) ** j * cmath.exp(1j * math.pi * tau * (j + 0.5) ** 2)
        term = c * np.sin((2 * j + 1) * v)
        num = num + term
        den += c * (2 * j + 1)
        if abs(c) * (2 * j + 1) < _REL_TERM * abs(den) and np.all(
                np.abs(term) < _REL_TERM * np.maximum(np.abs(num), 1e-300)):
            break
    return num / den


def sigma(z, lat: Lattice):
    """Weierstrass ``sigma(z)`` (entire, odd).

    Uses ``sigma(z + 2 m omega1 + 2 n omega3) = (-1)^(m+n+mn)
    exp((2 m eta1 + 2 n eta3)(z + m omega1 + n omega3)) sigma(z)``.
    """
    shape, z0, m, n, v = _prep(z, lat)
    w1 = lat.omega1
    base = (2 * w1 / math.pi) * np.exp(lat.eta1 * z0 * z0 / (2 * w1))
    base = base * _theta1_ratio(v, lat.tau)
    eta = 2 * m * lat.eta1 + 2 * n * lat.eta3
    sign = np.where((m + n + m * n) % 2 == 0, 1.0, -1.0)
    out = sign * np.exp(eta * (z0 + m * w1 + n * lat.omega3)) * base
    return _shape(out, shape)


def wp_derivative(z, lat: Lattice, order: int):
    """``d^order/dz^order wp(z)`` via the polynomial recursion in ``wp``, ``wp'``.

    Even derivatives are polynomials ``P(wp)``; odd ones are ``wp' * Q(wp)``.
    """
    if order < 0:
        raise ValueError("order must be >= 0")
    if order == 0:
        return wp(z, lat)
    if order == 1:
        return wp_prime(z, lat)
    g2, g3 = lat.g2, lat.g3
    P = np.polynomial.Polynomial
    x = P([0, 1])
    cubic = 4 * x**3 - g2 * x - g3
    half_dcubic = 6 * x**2 - g2 / 2
    poly = P([0, 1])  # wp itself, even
    odd = False
    for _ in range(order):
        if not odd:
            poly = poly.deriv()
        else:
            poly = half_dcubic * poly + cubic * poly.deriv()
        odd = not odd
    w = np.asarray(wp(z, lat))
    val = poly(w)
    if odd:
        val = val * np.asarray(wp_prime(z, lat))
    return complex(val) if np.ndim(val) == 0 else val


_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(64)


def _shell_tail(omega1, omega3, p: int) -> complex:
    # integral of (2 x omega1 + 2 y omega3)^(-p) outside the square [-1, 1]^2,
    # done in polar form on the eight pieces where the square's boundary is smooth
    tot = 0j
    for k in range(8):
        a, b = k * np.pi / 4, (k + 1) * np.pi / 4
        th = 0.5 * (a + b) + 0.5 * (b - a) * _GL_NODES
        u = 2 * np.cos(th) * omega1 + 2 * np.sin(th) * omega3
        rho = 1.0 / np.maximum(np.abs(np.cos(th)), np.abs(np.sin(th)))
        tot += np.sum(0.5 * (b - a) * _GL_WEIGHTS * u ** (-p) * rho ** (2 - p)) / (p - 2)
    return complex(tot)


def eisenstein_lattice_sum(omega1: complex, omega3: complex, N: int = 200):
    """``(g2, g3)`` by direct summation over ``|m|, |n| <= N``.

    The truncated sums ``60 sum' w^-4`` and ``140 sum' w^-6`` are completed by
    the continuum integral over the exterior of the square of half-side
    ``N + 1/2`` (midpoint rule), which reduces the truncation error from
    ``O(N^-2)`` to ``O(N^-4)``.  Independent of the theta-series code.
    """
    m = np.arange(-N, N + 1)
    M, Nn = np.meshgrid(m, m)
    keep = (M != 0) | (Nn != 0)
    W = (2 * M * omega1 + 2 * Nn * omega3)[keep]
    g = []
    for p, fac in ((4, 60.0), (6, 140.0)):
        s = np.sum(W ** (-p)) + _shell_tail(omega1, omega3, p) / (N + 0.5) ** (p - 2)
        g.append(complex(fac * s))
    return g[0], g[1]
