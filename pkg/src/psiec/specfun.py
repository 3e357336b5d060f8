"""Special functions and harmonic-analysis primitives.

Conventions used throughout the package:

* spherical harmonics ``y_lm(theta, phi) = C_lm P_l^m(cos theta) exp(i m phi)``
  with the Condon-Shortley phase inside ``P_l^m`` and orthonormal on S^2;
* Gaunt coefficients ``G(l1,m1; l2,m2 | l,m) = int y_l1m1 y_l2m2 conj(y_lm)``;
* Hankel profiles ``h_m(r) = int w(rho) J_m(rho r) rho drho`` in the plane and
  ``h_l^(q)(r) = int rho^-q w(rho) j_l(rho r) rho^2 drho`` in space.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy import special
from scipy.interpolate import CubicSpline

from ._jit import njit, prange


# ---------------------------------------------------------------------------
# Bessel functions

def bessel_j(m: int, x):
    """Cylindrical Bessel function of integer order, ``J_{-m} = (-1)^m J_m``."""
    m = int(m)
    sign = 1.0
    if m < 0:
        m = -m
        sign = -1.0 if m % 2 else 1.0
    return sign * special.jv(m, x)


_SERIES_CUTOFF = 0.5


def _spherical_series(l: int, x, terms: int = 14):
    # j_l(x) = x^l / (2l+1)!! * sum_k (-x^2/2)^k / (k! (2l+3)(2l+5)...(2l+2k+1))
    x = np.asarray(x, dtype=float)
    lead = x ** l / float(special.factorial2(2 * l + 1, exact=True))
    total = np.ones_like(x)
    term = np.ones_like(x)
    half = -0.5 * x * x
    for k in range(1, terms):
        term = term * half / (k * (2 * l + 2 * k + 1))
        total = total + term
    return lead * total


def spherical_bessel_j(l: int, x):
    """Spherical Bessel function ``j_l``; power series below ``x = 0.5``."""
    if l < 0:
        raise ValueError("spherical Bessel order must be non-negative")
    x = np.asarray(x, dtype=float)
    out = np.empty_like(x)
    small = np.abs(x) < _SERIES_CUTOFF
    if np.any(small):
        out[small] = _spherical_series(l, x[small])
    if np.any(~small):
        out[~small] = special.spherical_jn(l, x[~small])
    return out if out.ndim else float(out)


# ---------------------------------------------------------------------------
# Associated Legendre functions and spherical harmonics

def lm_index(l: int, m: int) -> int:
    """Flat position of ``(l, m)`` in a table of all harmonics up to some degree."""
    return l * l + l + m


def lm_pairs(max_degree: int):
    return [(l, m) for l in range(max_degree + 1) for m in range(-l, l + 1)]


@njit(cache=True)
def _normalized_legendre(lmax, x):
    """Table ``P[l, m, k] = C_lm P_l^m(x_k)`` for ``0 <= m <= l <= lmax``."""
    npts = x.shape[0]
    out = np.zeros((lmax + 1, lmax + 1, npts))
    for k in range(npts):
        xk = x[k]
        s = math.sqrt(max(0.0, 1.0 - xk * xk))
        pmm = 1.0 / math.sqrt(4.0 * math.pi)
        out[0, 0, k] = pmm
        for m in range(0, lmax + 1):
            if m > 0:
                pmm = -math.sqrt((2.0 * m + 1.0) / (2.0 * m)) * s * pmm
                out[m, m, k] = pmm
            if m + 1 <= lmax:
                out[m + 1, m, k] = math.sqrt(2.0 * m + 3.0) * xk * pmm
            for l in range(m + 2, lmax + 1):
                a = math.sqrt((4.0 * l * l - 1.0) / (l * l - m * m))
                b = math.sqrt(((l - 1.0) ** 2 - m * m) / (4.0 * (l - 1.0) ** 2 - 1.0))
                out[l, m, k] = a * (xk * out[l - 1, m, k] - b * out[l - 2, m, k])
    return out


def normalized_legendre(lmax: int, x) -> np.ndarray:
    x = np.ascontiguousarray(np.atleast_1d(np.asarray(x, dtype=float)).ravel())
    return _normalized_legendre(int(lmax), x)


def sph_harm(l: int, m: int, theta, phi):
    """Orthonormal complex spherical harmonic ``y_lm`` (colatitude ``theta``)."""
    if l < 0 or abs(m) > l:
        raise ValueError(f"invalid harmonic index (l={l}, m={m})")
    theta = np.asarray(theta, dtype=float)
    phi = np.asarray(phi, dtype=float)
    theta, phi = np.broadcast_arrays(theta, phi)
    table = normalized_legendre(l, np.cos(theta))
    p = table[l, abs(m)].reshape(theta.shape)
    if m < 0:
        p = p * (-1.0) ** (-m)
    val = p * np.exp(1j * m * phi)
    return val if val.ndim else complex(val)


def sph_harm_table(max_degree: int, theta, phi) -> np.ndarray:
    """All ``y_lm`` up to ``max_degree``; shape ``((L+1)^2,) + theta.shape``."""
    theta = np.asarray(theta, dtype=float)
    phi = np.asarray(phi, dtype=float)
    theta, phi = np.broadcast_arrays(theta, phi)
    shape = theta.shape
    leg = normalized_legendre(max_degree, np.cos(theta).ravel())
    ph = phi.ravel()
    out = np.empty(((max_degree + 1) ** 2, ph.size), dtype=complex)
    for m in range(0, max_degree + 1):
        e = np.exp(1j * m * ph)
        for l in range(m, max_degree + 1):
            v = leg[l, m] * e
            out[lm_index(l, m)] = v
            if m:
                out[lm_index(l, -m)] = (-1) ** m * np.conj(v)
    return out.reshape((out.shape[0],) + shape)


def sph_harm_cartesian(max_degree: int, unit: np.ndarray) -> np.ndarray:
    """Harmonics evaluated at unit vectors ``unit[..., 3]``."""
    unit = np.asarray(unit, dtype=float)
    theta = np.arccos(np.clip(unit[..., 2], -1.0, 1.0))
    phi = np.arctan2(unit[..., 1], unit[..., 0])
    return sph_harm_table(max_degree, theta, phi)


# ---------------------------------------------------------------------------
# Quadrature on the sphere

@dataclass(frozen=True)
class SphereQuadrature:
    """Gauss-Legendre in ``cos theta`` times a uniform rule in ``phi``.

    Integrates band-limited functions of total degree ``<= degree`` exactly.
    """
    degree: int
    theta: np.ndarray = field(repr=False)
    phi: np.ndarray = field(repr=False)
    weights: np.ndarray = field(repr=False)

    @classmethod
    def exact_to(cls, degree: int) -> "SphereQuadrature":
        return _sphere_rule(int(degree))

    @property
    def points(self) -> np.ndarray:
        st = np.sin(self.theta)
        return np.stack([st * np.cos(self.phi), st * np.sin(self.phi), np.cos(self.theta)], axis=-1)

    def integrate(self, values) -> complex:
        return np.tensordot(np.asarray(values), self.weights, axes=self.weights.ndim)


@lru_cache(maxsize=32)
def _sphere_rule(degree: int) -> SphereQuadrature:
    nt = degree // 2 + 1
    nphi = degree + 1
    x, w = np.polynomial.legendre.leggauss(nt)
    phi = 2.0 * np.pi * np.arange(nphi) / nphi
    theta = np.arccos(x)
    tt, pp = np.meshgrid(theta, phi, indexing="ij")
    ww = np.outer(w, np.full(nphi, 2.0 * np.pi / nphi))
    return SphereQuadrature(degree, tt, pp, ww)


def project_harmonics(func_values: np.ndarray, rule: SphereQuadrature, max_degree: int) -> np.ndarray:
    """Coefficients ``c_lm = int f conj(y_lm)`` from samples on ``rule``'s nodes.

    ``func_values`` may carry leading axes; the last two must match the rule grid.
    """
    y = sph_harm_table(max_degree, rule.theta, rule.phi)
    wy = np.conj(y) * rule.weights
    return np.tensordot(func_values, wy, axes=([-2, -1], [1, 2]))


# ---------------------------------------------------------------------------
# Gaunt coefficients

@njit(cache=True, parallel=True)
def _gaunt_kernel(leg, weights, lmax):
    # leg[l, m, k]: normalized Legendre at GL nodes; G via 2*pi * int P P P dx
    nlm = (lmax + 1) * (lmax + 1)
    out = np.zeros((nlm, nlm, nlm))
    for l1 in prange(lmax + 1):
        for m1 in range(-l1, l1 + 1):
            i1 = l1 * l1 + l1 + m1
            s1 = 1.0
            if m1 < 0 and (-m1) % 2 == 1:
                s1 = -1.0
            for l2 in range(lmax + 1):
                for m2 in range(-l2, l2 + 1):
                    m = m1 + m2
                    i2 = l2 * l2 + l2 + m2
                    s2 = 1.0
                    if m2 < 0 and (-m2) % 2 == 1:
                        s2 = -1.0
                    lo = abs(l1 - l2)
                    if lo < abs(m):
                        lo = abs(m)
                    for l in range(lo, min(l1 + l2, lmax) + 1):
                        if (l1 + l2 + l) % 2 == 1:
                            continue
                        s3 = 1.0
                        if m < 0 and (-m) % 2 == 1:
                            s3 = -1.0
                        acc = 0.0
                        for k in range(weights.shape[0]):
                            acc += weights[k] * leg[l1, abs(m1), k] * leg[l2, abs(m2), k] * leg[l, abs(m), k]
                        out[i1, i2, l * l + l + m] = 2.0 * math.pi * s1 * s2 * s3 * acc
    return out


class GauntTable:
    """Dense table of Gaunt coefficients for all degrees ``<= max_degree``.

    Built once by Gauss-Legendre quadrature (the azimuthal integral is done
    analytically), immutable afterwards.
    """

    def __init__(self, max_degree: int):
        self.max_degree = int(max_degree)
        x, w = np.polynomial.legendre.leggauss(3 * self.max_degree // 2 + 2)
        leg = normalized_legendre(self.max_degree, x)
        self.table = _gaunt_kernel(leg, np.ascontiguousarray(w), self.max_degree)
        self.table.setflags(write=False)

    def __call__(self, l1, m1, l2, m2, l, m) -> float:
        for a, b in ((l1, m1), (l2, m2), (l, m)):
            if a < 0 or abs(b) > a:
                raise ValueError(f"invalid harmonic index (l={a}, m={b})")
            if a > self.max_degree:
                raise ValueError(f"degree {a} exceeds table max_degree {self.max_degree}")
        if m != m1 + m2:
            return 0.0
        return float(self.table[lm_index(l1, m1), lm_index(l2, m2), lm_index(l, m)])

    def contract(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        """Harmonic coefficients of the pointwise product of two expansions."""
        na, nb = a.shape[-1], b.shape[-1]
        t = self.table[:na, :nb, :]
        return np.einsum("...i,...j,ijk->...k", a, b, t)


@lru_cache(maxsize=8)
def gaunt_table(max_degree: int) -> GauntTable:
    return GauntTable(max_degree)


def gaunt(l1: int, m1: int, l2: int, m2: int, l: int, m: int) -> float:
    """``int y_{l1 m1} y_{l2 m2} conj(y_{lm})`` over S^2 (zero off the selection rules)."""
    if m != m1 + m2 or l > l1 + l2 or l < abs(l1 - l2) or (l1 + l2 + l) % 2:
        return 0.0
    return gaunt_table(max(l1, l2, l))(l1, m1, l2, m2, l, m)


def wigner_zonal(l: int, m: int, direction) -> complex:
    """Zonal column of the Wigner rotation matrix, ``sqrt(4pi/(2l+1)) conj(y_lm)``.

    Rotating the zonal harmonic ``y_l0`` so that its axis points along
    ``direction`` gives ``sum_m wigner_zonal(l, m, direction) * y_lm``.
    """
    d = np.asarray(direction, dtype=float)
    d = d / np.linalg.norm(d)
    theta = math.acos(max(-1.0, min(1.0, d[2])))
    phi = math.atan2(d[1], d[0])
    return math.sqrt(4.0 * math.pi / (2 * l + 1)) * np.conj(sph_harm(l, m, theta, phi))


# ---------------------------------------------------------------------------
# Hankel transforms of radial windows

def _gl_nodes(breaks, r_max: float, base: int = 96):
    """Composite Gauss-Legendre rule on ``[breaks[i], breaks[i+1]]`` pieces."""
    nodes, weights = [], []
    for a, b in zip(breaks[:-1], breaks[1:]):
        if b <= a:
            continue
        n = base + int(math.ceil(1.5 * r_max * (b - a) / math.pi))
        x, w = np.polynomial.legendre.leggauss(n)
        nodes.append(0.5 * (b - a) * x + 0.5 * (a + b))
        weights.append(0.5 * (b - a) * w)
    return np.concatenate(nodes), np.concatenate(weights)


def _kernel(dim: int, order: int, z):
    if dim == 2:
        return bessel_j(order, z)
    if dim == 3:
        return special.spherical_jn(order, z)
    raise ValueError("dimension must be 2 or 3")


def hankel_profile(profile, order: int, weight_power: int, r, dim: int = 2, band: str = "wavelet",
                   extra_power: int = 0, chunk: int = 4096):
    """Radial profile of a polar atom by direct Gauss-Legendre quadrature.

    ``dim == 2``: ``int rho^-q w(rho) J_m(rho r) rho drho``;
    ``dim == 3``: ``int rho^-q w(rho) j_l(rho r) rho^2 drho``, where ``w`` is the
    wavelet window ``h_hat`` (``band='wavelet'``) or the scaling window
    ``g_hat`` (``band='scaling'``).  ``extra_power`` multiplies the integrand
    by ``rho^extra_power`` (used by the Laplace-de Rham evaluation).
    """
    q = int(weight_power)
    if q not in (0, 1, 2, 3):
        raise ValueError("weight_power must be one of 0, 1, 2, 3")
    if band == "scaling":
        if q >= dim:
            raise ValueError("the scaling window is supported at the origin; "
                             f"|xi|^-{q} is not integrable there in dimension {dim}")
        window, breaks = profile.g_hat, profile.g_breaks
    elif band == "wavelet":
        window, breaks = profile.h_hat, profile.h_breaks
    else:
        raise ValueError(f"unknown band {band!r}")
    r = np.asarray(r, dtype=float)
    flat = np.abs(r.ravel())
    order_idx = np.argsort(flat, kind="stable")
    ordered = flat[order_idx]
    out = np.empty(flat.shape)
    for s in range(0, flat.size, chunk):
        block = ordered[s:s + chunk]
        # node count follows the largest radius of the block (oscillation of the kernel)
        r_hi = 8.0 * math.ceil(float(block[-1]) / 8.0)
        rho, w = _gl_nodes(tuple(breaks), r_hi)
        radial = w * window(rho) * rho ** (dim - 1 - q + extra_power)
        out[order_idx[s:s + chunk]] = _kernel(dim, order, np.outer(block, rho)) @ radial
    return out.reshape(r.shape)


class HankelCache:
    """Cubic-spline tables of Hankel profiles on a uniform radius grid.

    Entries are built lazily per ``(order, weight_power, band, extra_power)``.
    Evaluation beyond ``r_max`` raises, since the spline would extrapolate.
    """

    def __init__(self, profile, dim: int, r_max: float, step: float = 0.01):
        self.profile = profile
        self.dim = int(dim)
        self.r_max = float(r_max)
        self.step = float(step)
        n = int(math.ceil(self.r_max / self.step)) + 1
        self.grid = np.linspace(0.0, (n - 1) * self.step, n)
        self._splines: dict = {}

    def spline(self, order: int, weight_power: int = 0, band: str = "wavelet", extra_power: int = 0):
        key = (int(order), int(weight_power), band, int(extra_power))
        if key not in self._splines:
            vals = hankel_profile(self.profile, order, weight_power, self.grid, self.dim, band, extra_power)
            self._splines[key] = CubicSpline(self.grid, vals)
        return self._splines[key]

    def __call__(self, order, r, weight_power=0, band="wavelet", extra_power=0):
        r = np.asarray(r, dtype=float)
        if r.size and float(np.max(r)) > self.grid[-1] + 1e-12:
            raise ValueError(f"radius {float(np.max(r)):.3f} exceeds Hankel cache extent {self.grid[-1]:.3f}")
        if self.dim == 2 and order < 0:
            sign = -1.0 if (-order) % 2 else 1.0
            return sign * self.spline(-order, weight_power, band, extra_power)(r)
        return self.spline(order, weight_power, band, extra_power)(r)
