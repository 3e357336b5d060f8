"""Scalar polar wavelets in two and three dimensions.

An atom is addressed by ``(level, k, t)``.  Level ``j >= 0`` atoms have the
frequency form

    (2 pi)^{-n/2} 2^{-jn/2} gamma_t(xi/|xi|) h_hat(2^-j |xi|) exp(-i xi . 2^-j k)

and level ``-1`` is the isotropic scaling band built from ``g_hat`` on the
integer lattice.  In space this is ``2^{jn/2} psi_0(2^j x - k)``.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from . import specfun
from .fields import Grid
from .windows import AngularWindow2D, AngularWindow3D, WindowSet

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class ScalarAtomIndex:
    dim: int
    level: int
    k: tuple
    t: int = 1

    def __post_init__(self):
        if self.dim not in (2, 3):
            raise ValueError("polar wavelets are defined for n = 2 and n = 3")
        if self.level < -1:
            raise ValueError("levels start at -1 (scaling band)")
        if len(self.k) != self.dim:
            raise ValueError("translation index has the wrong length")
        if self.level == -1 and self.t != 1:
            raise ValueError("the scaling band is isotropic and has a single orientation")
        if self.t < 1:
            raise ValueError("orientations are numbered from 1")
        object.__setattr__(self, "k", tuple(int(v) for v in self.k))

    @property
    def scale(self) -> int:
        return max(self.level, 0)

    @property
    def spacing(self) -> float:
        return lattice_spacing(self.level)

    @property
    def center(self) -> np.ndarray:
        return self.spacing * np.asarray(self.k, dtype=float)

    @property
    def band(self) -> str:
        return "scaling" if self.level < 0 else "wavelet"


def lattice_spacing(level: int) -> float:
    return 1.0 if level < 0 else 2.0 ** (-level)


def orientation_count(windows: WindowSet, dim: int, level: int) -> int:
    return 1 if level < 0 else windows.angular(dim).orientations


def polar_angles(xi):
    """``(rho, theta)`` in 2D or ``(rho, unit)`` in 3D; the zero vector gets a fixed direction."""
    xi = np.asarray(xi, dtype=float)
    rho = np.linalg.norm(xi, axis=-1)
    if xi.shape[-1] == 2:
        return rho, np.arctan2(xi[..., 1], xi[..., 0])
    safe = np.where(rho > 0, rho, 1.0)[..., None]
    unit = np.where((rho > 0)[..., None], xi / safe, np.array([0.0, 0.0, 1.0]))
    return rho, unit


def angular_values(windows: WindowSet, dim: int, level: int, t: int, direction) -> np.ndarray:
    """Direction window of orientation ``t`` (``theta`` in 2D, unit vectors in 3D)."""
    if level < 0:
        return np.ones(np.shape(direction)[:-1] if dim == 3 else np.shape(direction))
    val = windows.angular(dim).evaluate(t, direction)
    return _real(val, "angular window")


def _real(val, what, tol=1e-10):
    val = np.asarray(val)
    if np.iscomplexobj(val):
        scale = max(float(np.max(np.abs(val))), 1.0) if val.size else 1.0
        if val.size and float(np.max(np.abs(val.imag))) > tol * scale:
            raise ValueError(f"{what} is not real-valued")
        return val.real
    return val


def band_filter(windows: WindowSet, dim: int, level: int, t: int, xi) -> np.ndarray:
    """Atom spectrum at ``k = 0``: prefactor, direction window and radial window."""
    rho, direction = polar_angles(xi)
    s = max(level, 0)
    pref = (2 * math.pi) ** (-dim / 2) * 2.0 ** (-s * dim / 2)
    return pref * angular_values(windows, dim, level, t, direction) * windows.radial.band(level, rho)


def eval_freq_scalar(idx: ScalarAtomIndex, windows: WindowSet, xi) -> np.ndarray:
    xi = np.asarray(xi, dtype=float)
    phase = np.exp(-1j * (xi @ idx.center))
    return band_filter(windows, idx.dim, idx.level, idx.t, xi) * phase


# ---------------------------------------------------------------------------
# Closed-form spatial evaluation

_CACHES: dict = {}


def hankel_cache(radial, dim: int, r_max: float) -> specfun.HankelCache:
    """Shared spline cache for ``radial``; grown in steps of 16 length units."""
    key = (radial.kind, dim)
    cache = _CACHES.get(key)
    if cache is None or cache.r_max < r_max:
        extent = 16.0 * math.ceil(max(r_max, 1.0) / 16.0)
        cache = specfun.HankelCache(radial, dim, extent)
        _CACHES[key] = cache
    return cache


def angular_harmonics_2d(window: AngularWindow2D, t: int) -> dict:
    return {int(m): complex(b) for m, b in zip(window.harmonics, window.coefficients(t)) if b != 0}


def polar_inverse(dim: int, level: int, harmonics, weight_power: int, y, radial,
                  extra_power: int = 0) -> np.ndarray:
    """Inverse transform of ``A(xi/|xi|) |xi|^-q w_j(|xi|) (2pi)^{-n/2} 2^{-sn/2}`` at offsets ``y``.

    ``harmonics`` is ``{m: a_m}`` (plane) or a flat ``lm`` array (space);
    the Jacobi-Anger / Rayleigh expansions reduce each term to a Hankel
    profile of the radial window.
    """
    return polar_inverse_many(dim, level, [harmonics], weight_power, y, radial, extra_power)[0]


def polar_inverse_many(dim: int, level: int, harmonic_sets, weight_power: int, y, radial,
                       extra_power: int = 0) -> list:
    """:func:`polar_inverse` for several angular expansions sharing the same points."""
    y = np.asarray(y, dtype=float)
    s = max(level, 0)
    band = "scaling" if level < 0 else "wavelet"
    r = np.linalg.norm(y, axis=-1)
    cache = hankel_cache(radial, dim, 2.0 ** s * float(np.max(r)) if r.size else 1.0)
    outs = [np.zeros(r.shape, dtype=complex) for _ in harmonic_sets]
    if dim == 2:
        theta = np.arctan2(y[..., 1], y[..., 0])
        pref = 2.0 ** (s * (1 - weight_power + extra_power)) / (2 * math.pi)
        orders = sorted({m for h in harmonic_sets for m, a in h.items() if a != 0})
        for m in orders:
            term = (1j ** (m % 4)) * np.exp(1j * m * theta) * cache(m, 2.0 ** s * r, weight_power, band, extra_power)
            for out, h in zip(outs, harmonic_sets):
                a = h.get(m, 0)
                if a != 0:
                    out += a * term
        return [pref * o for o in outs]
    _, unit = polar_angles(y)
    sets = [np.asarray(h) for h in harmonic_sets]
    L = max(int(round(math.sqrt(h.size))) - 1 for h in sets)
    ytab = specfun.sph_harm_cartesian(L, unit)
    pref = 2.0 ** (s * (1.5 - weight_power + extra_power)) / (2 * math.pi ** 2)
    for l in range(L + 1):
        blocks = [h[l * l:(l + 1) ** 2] if h.size >= (l + 1) ** 2 else None for h in sets]
        if not any(b is not None and np.any(np.abs(b) > 0) for b in blocks):
            continue
        prof = (1j ** (l % 4)) * cache(l, 2.0 ** s * r, weight_power, band, extra_power)
        for out, b in zip(outs, blocks):
            if b is not None and np.any(np.abs(b) > 0):
                out += np.tensordot(b, ytab[l * l:(l + 1) ** 2], axes=1) * prof
    return [pref * o for o in outs]


def angular_harmonics(windows: WindowSet, dim: int, level: int, t: int):
    """Harmonic coefficients of the direction window (isotropic at the scaling band)."""
    if dim == 2:
        if level < 0:
            return {0: 1.0}
        return angular_harmonics_2d(windows.angular2d, t)
    if level < 0:
        out = np.zeros(1, dtype=complex)
        out[0] = math.sqrt(4 * math.pi)
        return out
    win: AngularWindow3D = windows.angular3d
    if win.polar_factor:
        raise ValueError("windows with the polar factor have no finite harmonic expansion")
    return win.kappa[t - 1]


def eval_space_scalar(idx: ScalarAtomIndex, windows: WindowSet, x, imag_tol: float = 1e-10) -> np.ndarray:
    """Closed-form spatial value of a scalar atom at points ``x[..., n]``."""
    x = np.asarray(x, dtype=float)
    y = x - idx.center
    harm = angular_harmonics(windows, idx.dim, idx.level, idx.t)
    val = polar_inverse(idx.dim, idx.level, harm, 0, y, windows.radial)
    scale = max(float(np.max(np.abs(val))), 1e-300) if val.size else 1.0
    resid = float(np.max(np.abs(val.imag))) / scale if val.size else 0.0
    if resid > imag_tol:
        raise ValueError(f"atom is not real-valued (relative residue {resid:.2e})")
    return val.real


# ---------------------------------------------------------------------------
# Lattice analysis and synthesis on a periodic grid

def lattice_indices(grid: Grid, level: int) -> np.ndarray:
    """Grid indices of the translation lattice of ``level`` along one axis."""
    stride = lattice_spacing(level) / grid.spacing
    if abs(stride - round(stride)) > 1e-9 or round(stride) < 1:
        raise ValueError(f"grid spacing {grid.spacing} does not resolve the level-{level} lattice")
    stride = int(round(stride))
    return np.arange((grid.size // 2) % stride, grid.size, stride)


def lattice_k(grid: Grid, level: int) -> np.ndarray:
    stride = int(round(lattice_spacing(level) / grid.spacing))
    return (lattice_indices(grid, level) - grid.size // 2) // stride


def check_levels(grid: Grid, levels: int):
    top = levels - 1
    if top >= 0 and 2.0 ** top * math.pi > grid.nyquist * (1 + 1e-12):
        raise ValueError(f"{levels} levels need Nyquist >= {2.0 ** top * math.pi:.3f}, grid has {grid.nyquist:.3f}")
    lattice_indices(grid, top)


@dataclass
class ScalarFrame:
    """Band filters of a ``levels``-level frame sampled on a grid (``j = -1 .. levels-1``)."""
    grid: Grid
    windows: WindowSet
    levels: int
    filters: dict = field(init=False, repr=False)

    def __post_init__(self):
        check_levels(self.grid, self.levels)
        xi = self.grid.freq_points()
        dim = self.grid.dim
        rho, direction = polar_angles(xi)
        self.filters = {}
        if dim == 3:
            win = self.windows.angular3d
            ytab = specfun.sph_harm_cartesian(win.max_degree, direction)
            polar = np.sqrt(np.clip(1.0 - direction[..., 2] ** 2, 0.0, None)) if win.polar_factor else 1.0
        for j in range(-1, self.levels):
            radial = self.windows.radial.band(j, rho)
            s = max(j, 0)
            pref = (2 * math.pi) ** (-dim / 2) * 2.0 ** (-s * dim / 2)
            for t in range(1, orientation_count(self.windows, dim, j) + 1):
                if j < 0:
                    ang = 1.0
                elif dim == 2:
                    ang = _real(self.windows.angular2d.evaluate(t, direction), "angular window")
                else:
                    ang = _real(np.tensordot(win.kappa[t - 1], ytab, axes=1), "angular window") * polar
                self.filters[(j, t)] = pref * ang * radial

    @property
    def dim(self) -> int:
        return self.grid.dim

    def bands(self):
        return list(self.filters)

    def coverage(self) -> np.ndarray:
        """``sum |filter|^2`` rescaled to 1 where the frame is tight."""
        total = np.zeros(self.grid.shape)
        for (j, _), a in self.filters.items():
            total += (2 * math.pi) ** self.dim * 2.0 ** (max(j, 0) * self.dim) * a ** 2
        return total

    def leakage(self, spectrum) -> float:
        power = np.abs(spectrum) ** 2
        total = float(np.sum(power))
        if total == 0:
            return 0.0
        return float(np.sum(power * np.abs(1.0 - self.coverage()))) / total

    def _lattice_slice(self, level: int):
        idx = lattice_indices(self.grid, level)
        return np.ix_(*([idx] * self.dim))

    def analyze_band(self, spectrum, level: int, t: int) -> np.ndarray:
        g = (2 * math.pi) ** (self.dim / 2) * self.grid.to_space(spectrum * self.filters[(level, t)])
        return g[self._lattice_slice(level)]

    def synthesize_band(self, coeffs, level: int, t: int) -> np.ndarray:
        u = np.zeros(self.grid.shape, dtype=complex)
        u[self._lattice_slice(level)] = coeffs
        return self.filters[(level, t)] * np.fft.fftn(np.fft.ifftshift(u))

    def analyze(self, spectrum) -> dict:
        return {band: self.analyze_band(spectrum, *band) for band in self.filters}

    def synthesize(self, coeffs: dict) -> np.ndarray:
        out = np.zeros(self.grid.shape, dtype=complex)
        for (j, t), c in coeffs.items():
            out += self.synthesize_band(c, j, t)
        return out


@dataclass
class RoundtripReport:
    reconstruction: np.ndarray
    coefficients: dict
    rel_error: float
    parseval_error: float
    leakage: float
    warnings: list

    @property
    def ok(self) -> bool:
        return not self.warnings


def coefficient_energy(coeffs: dict) -> float:
    return float(sum(np.sum(np.abs(c) ** 2) for c in coeffs.values()))


def scalar_roundtrip(field_values, grid: Grid, levels: int, windows: WindowSet,
                     leakage_tol: float = 1e-6, frame: ScalarFrame | None = None) -> RoundtripReport:
    """Analyze a sampled scalar field, synthesize it back and report the errors."""
    field_values = np.asarray(field_values, dtype=float)
    frame = frame or ScalarFrame(grid, windows, levels)
    spec = grid.to_freq(field_values)
    coeffs = frame.analyze(spec)
    recon = grid.to_space(frame.synthesize(coeffs)).real
    norm = math.sqrt(float(grid.integrate(field_values ** 2)))
    warnings = []
    leak = frame.leakage(spec)
    if leak > leakage_tol:
        warnings.append(f"spectral leakage {leak:.2e} exceeds {leakage_tol:.0e}: field is not inside the frame cover")
        log.warning(warnings[-1])
    if norm == 0:
        return RoundtripReport(recon, coeffs, 0.0, 0.0, leak, warnings)
    err = math.sqrt(float(grid.integrate((recon - field_values) ** 2))) / norm
    parseval = abs(coefficient_energy(coeffs) - norm ** 2) / norm ** 2
    return RoundtripReport(recon, coeffs, err, parseval, leak, warnings)
