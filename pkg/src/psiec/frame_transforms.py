"""Analysis and synthesis of sampled forms, fiber integration, characteristic forms.

All inner products are evaluated on the frequency side of a periodic grid.
Exact atoms are paired in L2, co-exact atoms in the homogeneous H1 pairing
(weight ``|xi|^2``), which makes both families tight frames of their
respective spaces.
"""
from __future__ import annotations

import csv
import hashlib
import json
import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import special

from . import exterior_ft as eft
from .fields import Grid, SampledFormField, monomials
from .form_wavelets import (FormAtomIndex, atom_types, descriptor, eval_freq_form, eval_space_form,
                            frame_components, freq_vector)
from .scalar_polarlets import ScalarAtomIndex, ScalarFrame, lattice_k, polar_angles
from .windows import AngularWindow2D, WindowSet

log = logging.getLogger(__name__)

LEAKAGE_TOL = 1e-6


def config_hash(windows: WindowSet) -> str:
    blob = json.dumps(windows.to_dict(), sort_keys=True).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


@dataclass
class FrameCoefficients:
    """Coefficient arrays per band ``(nu, family, level, t)`` on the translation lattice."""
    dim: int
    degree: int
    levels: int
    grid: Grid
    bands: dict = field(default_factory=dict)
    pairing: dict = field(default_factory=dict)
    config: str = ""
    leakage: float = 0.0

    def types(self):
        return sorted({(nu, a) for nu, a, _, _ in self.bands})

    def sub(self, nu: str) -> dict:
        """Bands of one type; exact and co-exact coefficients never mix."""
        return {k: v for k, v in self.bands.items() if k[0] == nu}

    def energy(self, nu: str | None = None, max_level: int | None = None) -> float:
        total = 0.0
        for (n_, _, j, _), c in self.bands.items():
            if (nu is None or n_ == nu) and (max_level is None or j < max_level):
                total += float(np.sum(np.abs(c) ** 2))
        return total

    def truncated(self, levels: int) -> "FrameCoefficients":
        keep = {k: v for k, v in self.bands.items() if k[2] < levels}
        return FrameCoefficients(self.dim, self.degree, levels, self.grid, keep, dict(self.pairing),
                                 self.config, self.leakage)

    def scaled(self, c) -> "FrameCoefficients":
        return FrameCoefficients(self.dim, self.degree, self.levels, self.grid,
                                 {k: c * v for k, v in self.bands.items()}, dict(self.pairing),
                                 self.config, self.leakage)

    def __add__(self, other: "FrameCoefficients") -> "FrameCoefficients":
        out = dict(self.bands)
        for k, v in other.bands.items():
            out[k] = out[k] + v if k in out else v
        return FrameCoefficients(self.dim, self.degree, max(self.levels, other.levels), self.grid, out,
                                 {**self.pairing, **other.pairing}, self.config, self.leakage)

    def _k_axis(self, level):
        return lattice_k(self.grid, level)

    def __getitem__(self, idx: FormAtomIndex):
        s = idx.scalar
        arr = self.bands[(idx.nu, idx.family, s.level, s.t)]
        ks = self._k_axis(s.level)
        pos = tuple(int(np.searchsorted(ks, v)) for v in s.k)
        if any(p >= len(ks) or ks[p] != v for p, v in zip(pos, s.k)):
            raise KeyError(f"translation {s.k} is not on the level-{s.level} lattice of this grid")
        return arr[pos]

    def items(self):
        """Iterate ``(FormAtomIndex, value)`` in a deterministic order."""
        for (nu, a, j, t) in sorted(self.bands, key=lambda k: (k[0], k[1], k[2], k[3])):
            arr = self.bands[(nu, a, j, t)]
            ks = self._k_axis(j)
            for pos in np.ndindex(arr.shape):
                k = tuple(int(ks[p]) for p in pos)
                yield FormAtomIndex(ScalarAtomIndex(self.dim, j, k, t), self.degree, nu, a), arr[pos]

    def __len__(self):
        return int(sum(v.size for v in self.bands.values()))

    def to_csv(self, path, threshold: float = 0.0):
        """Columns ``n, r, nu, a, j, k1..kn, t, value``."""
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["n", "r", "nu", "a", "j"] + [f"k{i + 1}" for i in range(self.dim)] + ["t", "value"])
            for idx, val in self.items():
                if abs(val) <= threshold:
                    continue
                s = idx.scalar
                v = f"{float(np.real(val)):.17g}" if np.isrealobj(val) else f"{complex(val)!r}"
                w.writerow([self.dim, self.degree, idx.nu, idx.family, s.level, *s.k, s.t, v])


def _maybe_real(arr, tol=1e-10):
    arr = np.asarray(arr)
    if arr.size == 0:
        return arr.real
    scale = float(np.max(np.abs(arr)))
    if scale == 0 or float(np.max(np.abs(arr.imag))) <= tol * scale:
        return arr.real.copy()
    return arr


class FormFrame:
    """Frame of all form atoms of one degree on a periodic grid."""

    def __init__(self, grid: Grid, windows: WindowSet, levels: int, degree: int,
                 scalar: ScalarFrame | None = None):
        if grid.dim not in (2, 3):
            raise ValueError("form frames exist for n = 2 and n = 3")
        self.grid = grid
        self.windows = windows
        self.levels = levels
        self.degree = degree
        self.scalar = scalar or ScalarFrame(grid, windows, levels)
        self.rho = grid.freq_radius()
        xi = grid.freq_points()
        self.types = [(nu, a) for (r, nu, a) in atom_types(grid.dim) if r == degree]
        self.vectors = {(nu, a): freq_vector(descriptor((degree, nu, a), grid.dim), xi)
                        for nu, a in self.types}

    def default_pairing(self, nu: str) -> str:
        return "h1" if nu == "delta" else "l2"

    def _weight(self, pairing: str):
        if pairing == "l2":
            return 1.0
        if pairing == "h1":
            return self.rho ** 2
        raise ValueError(f"unknown pairing {pairing!r}")

    def projected(self, spectrum: dict, nu: str, a: int, pairing: str) -> np.ndarray:
        """Scalar spectrum ``w * sum_K alpha_K conj(V_K)`` fed to the scalar frame."""
        vec = self.vectors[(nu, a)]
        total = np.zeros(self.grid.shape, dtype=complex)
        for K, v in vec.items():
            if K in spectrum:
                total += spectrum[K] * np.conj(v)
        return self._weight(pairing) * total

    def analyze_spectrum(self, spectrum: dict, types=None, pairing: dict | None = None,
                         warn: bool = True) -> FrameCoefficients:
        types = types or self.types
        pairing = {nu: (pairing or {}).get(nu, self.default_pairing(nu)) for nu, _ in types}
        out = FrameCoefficients(self.grid.dim, self.degree, self.levels, self.grid, {}, pairing,
                                config_hash(self.windows))
        power = sum(np.abs(v) ** 2 for v in spectrum.values()) if spectrum else 0.0
        total = float(np.sum(power))
        if total > 0:
            out.leakage = float(np.sum(power * np.abs(1.0 - self.scalar.coverage()))) / total
            if warn and out.leakage > LEAKAGE_TOL:
                log.warning("spectral leakage %.2e: field energy outside the frame cover", out.leakage)
        for nu, a in types:
            g = self.projected(spectrum, nu, a, pairing[nu])
            if not np.any(g):
                continue
            for (j, t), c in self.scalar.analyze(g).items():
                out.bands[(nu, a, j, t)] = _maybe_real(c)
        return out

    def synthesize_spectrum(self, coeffs: FrameCoefficients) -> dict:
        if coeffs.degree != self.degree:
            raise ValueError("coefficient degree does not match the frame")
        out = {K: np.zeros(self.grid.shape, dtype=complex) for K in monomials(self.grid.dim, self.grid.dim - self.degree)}
        for nu, a in {(nu, a) for nu, a, _, _ in coeffs.bands}:
            part = {(j, t): c for (n_, a_, j, t), c in coeffs.bands.items() if (n_, a_) == (nu, a)}
            scal = self.scalar.synthesize(part)
            pairing = coeffs.pairing.get(nu, self.default_pairing(nu))
            # coefficients taken in a non-native pairing need the dual frame
            dual = 1.0 if pairing == self.default_pairing(nu) else 1.0 / np.where(self.rho > 0, self._weight(pairing) / self._weight(self.default_pairing(nu)), 1.0)
            for K, v in self.vectors[(nu, a)].items():
                out[K] += dual * v * scal
        return out

    def analyze(self, field_: SampledFormField, types=None, pairing=None) -> FrameCoefficients:
        if field_.degree != self.degree or field_.grid != self.grid:
            raise ValueError("field does not match the frame grid or degree")
        return self.analyze_spectrum(field_.spectrum(), types, pairing)

    def synthesize(self, coeffs: FrameCoefficients) -> SampledFormField:
        return SampledFormField.from_spectrum(self.grid, self.degree, self.synthesize_spectrum(coeffs), 1e-8)


def analyze(field_: SampledFormField, levels: int, windows: WindowSet, types=None) -> FrameCoefficients:
    """Frame coefficients of a sampled form (pairing chosen from the atom type)."""
    return FormFrame(field_.grid, windows, levels, field_.degree).analyze(field_, types)


def synthesize(coeffs: FrameCoefficients, windows: WindowSet, grid: Grid | None = None) -> SampledFormField:
    grid = grid or coeffs.grid
    return FormFrame(grid, windows, coeffs.levels, coeffs.degree).synthesize(coeffs)


def random_form_spectrum(frame: FormFrame, nu: str, cutoff: float, rng, amplitude: float = 1.0) -> dict:
    """Spectrum of a random real form of one type, band-limited to ``|xi| < cutoff``."""
    from .fields import random_spectrum
    out = {K: np.zeros(frame.grid.shape, dtype=complex)
           for K in monomials(frame.grid.dim, frame.grid.dim - frame.degree)}
    for (n_, a), vec in frame.vectors.items():
        if n_ != nu:
            continue
        s = amplitude * random_spectrum(frame.grid, cutoff, rng)
        for K, v in vec.items():
            out[K] += v * s
    return out


# ---------------------------------------------------------------------------
# Fiber integration

@dataclass
class FiberIntegral:
    """Restriction of a 3D atom: ``scale`` times planar atoms with angular windows ``beta``."""
    source: FormAtomIndex
    scale: float
    parts: list          # [(planar FormAtomIndex, AngularWindow2D)]

    def evaluate(self, windows: WindowSet, x) -> dict:
        total: dict = {}
        for idx, win in self.parts:
            w = WindowSet(windows.radial, win, windows.angular3d)
            for J, v in eval_space_form(idx, w, x).items():
                total[J] = total.get(J, 0.0) + self.scale * v
        return total


def _restricted_planar_spectrum(idx: FormAtomIndex, windows: WindowSet, theta: np.ndarray) -> dict:
    """Angular part of the fiber-integrated atom on the unit circle of the xi1-xi2 plane.

    Uses components ``alpha_J`` with ``dx3`` last in ``J``; returns planar
    Cartesian frequency components without the radial window.
    """
    unit3 = np.stack([np.cos(theta), np.sin(theta), np.zeros_like(theta)], -1)
    desc = descriptor(idx)
    s = idx.scalar
    if s.level < 0:
        gamma = np.ones_like(theta)
    else:
        gamma = np.real(windows.angular3d.evaluate(s.t, unit3))
    comps = frame_components(3, desc.monomial, unit3)
    out: dict = {}
    for K, E in comps.items():
        if 2 in K:
            continue
        J = eft.complement(K, 3)          # contains index 2 (dx3) as its last entry
        sign3, _ = eft.ft_basis_rule(J, 3)
        Jp = J[:-1]
        sign2, Kp = eft.ft_basis_rule(Jp, 2)
        out[Kp] = out.get(Kp, 0) + sign2 * sign3 * desc.coeff * gamma * E
    return out


def fiber_integrate(idx: FormAtomIndex, windows: WindowSet, axis: int = 2, samples: int = 64) -> FiberIntegral:
    """Integrate a 3D atom along the ``x3`` fiber (other axes: rotate the window first)."""
    if idx.dim != 3:
        raise ValueError("fiber integration maps 3D atoms to the plane")
    if idx.degree < 1:
        raise ValueError("a 0-form has no fiber integral in this calculus")
    if axis != 2:
        raise NotImplementedError("only the x3 fiber is supported; rotate the window to integrate along other axes")
    desc3 = descriptor(idx)
    theta = 2 * math.pi * np.arange(samples) / samples
    planar = _restricted_planar_spectrum(idx, windows, theta)
    unit2 = np.stack([np.cos(theta), np.sin(theta)], -1)
    parts = []
    s = idx.scalar
    for (r, nu, a) in atom_types(2):
        if r != idx.degree - 1:
            continue
        d2 = descriptor((r, nu, a), 2)
        E2 = frame_components(2, d2.monomial, unit2)
        proj = sum(planar.get(K, 0) * np.conj(E2[K]) for K in E2)
        proj = np.asarray(proj, dtype=complex) / d2.coeff
        if not np.any(np.abs(proj) > 1e-13):
            continue
        if d2.weight_power != desc3.weight_power:
            raise ValueError("fiber restriction changes the Sobolev weight")
        coef = np.fft.fft(proj) / samples
        order = samples // 2 - 1
        ms = np.arange(-order, order + 1)
        beta = coef[ms % samples]
        beta[np.abs(beta) < 1e-14] = 0.0
        nz = np.nonzero(beta)[0]
        if nz.size:
            m_max = int(np.max(np.abs(ms[nz])))
            beta = beta[order - m_max:order + m_max + 1]
        planar_idx = FormAtomIndex(ScalarAtomIndex(2, s.level, s.k[:2], 1), r, nu, a)
        parts.append((planar_idx, AngularWindow2D(beta, 1)))
    scale = 2.0 ** (-s.scale / 2)
    return FiberIntegral(idx, scale, parts)


def restricted_beta(kappa: np.ndarray) -> dict:
    """``beta_m = sum_l kappa_lm C_lm P_l^m(0)`` for a harmonic window ``kappa``."""
    from . import specfun
    L = int(round(math.sqrt(kappa.size))) - 1
    leg = specfun.normalized_legendre(L, np.array([0.0]))[:, :, 0]
    out: dict = {}
    for l in range(L + 1):
        for m in range(-l, l + 1):
            c = kappa[specfun.lm_index(l, m)]
            p = leg[l, abs(m)] * ((-1) ** (-m) if m < 0 else 1)
            out[m] = out.get(m, 0) + c * p
    return {m: v for m, v in out.items() if abs(v) > 1e-14}


def grid_fiber_integral(field_: SampledFormField) -> dict:
    """Trapezoid integration of a sampled 3D form along ``x3`` (components with ``dx3`` last)."""
    g = field_.grid
    out = {}
    for J, arr in field_.components.items():
        if J and J[-1] == 2:
            out[J[:-1]] = arr.sum(axis=2) * g.spacing
    return out


# ---------------------------------------------------------------------------
# Characteristic forms and Stokes' theorem

@dataclass(frozen=True)
class CharacteristicShape:
    kind: str
    center: tuple = (0.0, 0.0)
    size: float = 1.0     # radius (disc) or side (square); unused for the halfspace

    def __post_init__(self):
        if self.kind not in ("disc", "square", "halfspace"):
            raise ValueError(f"unknown shape {self.kind!r}")
        if self.size <= 0:
            raise ValueError("shape size must be positive")

    def check_grid(self, grid: Grid):
        if grid.dim != 2:
            raise ValueError("characteristic forms are implemented in the plane")
        if self.kind == "halfspace":
            return
        half = self.size if self.kind == "disc" else self.size / 2
        if any(abs(c) + half > grid.extent / 2 for c in self.center):
            raise ValueError("shape does not fit inside the grid extent")


def interior_spectrum(shape: CharacteristicShape, grid: Grid) -> np.ndarray:
    """Spectrum of the indicator (as the coefficient of ``dx1 ^ dx2``)."""
    shape.check_grid(grid)
    xi = grid.freq_points()
    rho = grid.freq_radius()
    c = np.asarray(shape.center, dtype=float)
    if shape.kind == "disc":
        R = shape.size
        safe = np.where(rho > 0, rho, 1.0)
        prof = np.where(rho > 0, R * special.j1(R * safe) / safe, 0.5 * R * R)
        return prof * np.exp(-1j * (xi @ c))
    X = grid.mesh()
    if shape.kind == "square":
        h = shape.size / 2
        # cell-area weights keep the rasterized area exact for grid-aligned sides
        wx = np.clip((h - np.abs(X[0] - c[0])) / grid.spacing + 0.5, 0.0, 1.0)
        wy = np.clip((h - np.abs(X[1] - c[1])) / grid.spacing + 0.5, 0.0, 1.0)
        return grid.to_freq(wx * wy)
    ind = np.where(X[0] > c[0], 1.0, np.where(X[0] == c[0], 0.5, 0.0))
    return grid.to_freq(ind)


def _segment_current(xi, a, b):
    """Transform of the unit-speed current along the segment ``a -> b``."""
    a = np.asarray(a, float)
    b = np.asarray(b, float)
    length = float(np.linalg.norm(b - a))
    tau = (b - a) / length
    k = xi @ tau
    small = np.abs(k * length) < 1e-8
    safe = np.where(small, 1.0, k)
    integral = np.where(small, length - 0.5j * k * length ** 2,
                        (1.0 - np.exp(-1j * safe * length)) / (1j * safe))
    scalar = np.exp(-1j * (xi @ a)) * integral / (2 * math.pi)
    return scalar[..., None] * tau


def boundary_spectrum(shape: CharacteristicShape, grid: Grid) -> dict:
    """Form spectrum ``{K: values}`` of the positively oriented boundary current (a 1-form)."""
    shape.check_grid(grid)
    xi = grid.freq_points()
    rho = grid.freq_radius()
    c = np.asarray(shape.center, dtype=float)
    if shape.kind == "disc":
        R = shape.size
        # i R J1(R|xi|) e^{-i xi.c} d/dr on the frequency side
        scal = 1j * R * special.j1(R * rho) * np.exp(-1j * (xi @ c))
        _, theta = polar_angles(xi)
        return {(0,): scal * np.cos(theta), (1,): scal * np.sin(theta)}
    if shape.kind == "square":
        h = shape.size / 2
        corners = [c + np.array(v) for v in ((h, -h), (h, h), (-h, h), (-h, -h))]
        vec = sum(_segment_current(xi, corners[i], corners[(i + 1) % 4]) for i in range(4))
    else:
        # boundary of {x1 > c1}: the line x1 = c1 traversed downwards
        vec = np.zeros(xi.shape, dtype=complex)
        on_axis = np.isclose(xi[..., 1], 0.0)
        vec[..., 1] = np.where(on_axis, -grid.extent / (2 * math.pi), 0.0) * np.exp(-1j * xi[..., 0] * c[0])
    # 1-form spectrum: F(T1 dx1 + T2 dx2) = T1 d/dxi2 - T2 d/dxi1
    return {(1,): vec[..., 0], (0,): -vec[..., 1]}


def characteristic_coefficients(shape: CharacteristicShape, grid: Grid, windows: WindowSet, levels: int,
                                boundary: bool) -> FrameCoefficients:
    """``chi_s`` pairings: interior indicator against exact 2-form atoms, or the
    boundary current against co-exact 1-form atoms (both in L2)."""
    if boundary:
        frame = FormFrame(grid, windows, levels, 1)
        return frame.analyze_spectrum(boundary_spectrum(shape, grid), [("delta", 1)], {"delta": "l2"}, warn=False)
    frame = FormFrame(grid, windows, levels, 2)
    # indicators are never band-limited; leakage is recorded but expected
    return frame.analyze_spectrum({(): interior_spectrum(shape, grid)}, [("d", 1)], warn=False)


def characteristic_atom(idx: FormAtomIndex, shape: CharacteristicShape, windows: WindowSet,
                        nodes: int = 64) -> complex:
    """Free-space pairing of one planar atom with a disc, by polar quadrature over its frequency support.

    Exact 2-form atoms are integrated over the disc, co-exact 1-form atoms
    along its boundary circle. Unlike :func:`characteristic_coefficients`
    there is no periodization.
    """
    if shape.kind != "disc" or idx.dim != 2:
        raise ValueError("atom-level quadrature is implemented for the planar disc")
    s = idx.scalar
    lo, hi = windows.radial.band_support(s.level)
    scale = 1.0 if s.level < 0 else 2.0 ** s.level
    brk = windows.radial.g_breaks if s.level < 0 else windows.radial.h_breaks
    breaks = sorted({lo, hi, *(scale * v for v in brk if lo < scale * v < hi)})
    x, w = np.polynomial.legendre.leggauss(nodes)
    rho = np.concatenate([0.5 * (q - p) * x + 0.5 * (p + q) for p, q in zip(breaks[:-1], breaks[1:])])
    wr = np.concatenate([0.5 * (q - p) * w for p, q in zip(breaks[:-1], breaks[1:])])
    c0 = np.asarray(shape.center, dtype=float)
    reach = hi * (np.linalg.norm(s.center) + np.linalg.norm(c0) + shape.size)
    m = 1 << int(math.ceil(math.log2(2 * reach + 64)))
    theta = 2 * math.pi * np.arange(m) / m
    P, T = np.meshgrid(rho, theta, indexing="ij")
    xi = np.stack([P * np.cos(T), P * np.sin(T)], -1)
    comps = eval_freq_form(idx, windows, xi)
    R = shape.size
    phase = np.exp(1j * (xi @ c0))
    if idx.degree == 2:
        integrand = R * special.j1(R * P) / P * phase * comps[()]
    elif idx.degree == 1:
        radial = comps[(0,)] * np.cos(T) + comps[(1,)] * np.sin(T)
        integrand = -1j * R * special.j1(R * P) * phase * radial
    else:
        raise ValueError("disc pairings need 1-form (boundary) or 2-form (interior) atoms")
    return complex(np.sum(integrand * (P * wr[:, None])) * 2 * math.pi / m)


def stokes_residual(alpha: FrameCoefficients, shape: CharacteristicShape, windows: WindowSet) -> dict:
    """Per truncation level ``J``: ``|sum alpha chi^boundary - sum alpha chi^interior|``.

    ``alpha`` holds coefficients on co-exact 1-form atoms; the interior side
    uses the same coefficients on the exact 2-form atoms (their derivatives).
    """
    grid = alpha.grid
    if alpha.degree != 1 or alpha.dim != 2:
        raise ValueError("Stokes pairs co-exact 1-form coefficients in the plane")
    chi_b = characteristic_coefficients(shape, grid, windows, alpha.levels, boundary=True)
    chi_m = characteristic_coefficients(shape, grid, windows, alpha.levels, boundary=False)
    out = {}
    for J in range(0, alpha.levels + 1):
        sb = sm = 0.0
        for (nu, a, j, t), c in alpha.bands.items():
            if nu != "delta" or j >= J:
                continue
            sb += complex(np.sum(c * chi_b.bands[("delta", a, j, t)]))
            sm += complex(np.sum(c * chi_m.bands[("d", a, j, t)]))
        out[J] = {"boundary": complex(sb), "interior": complex(sm), "residual": abs(sb - sm)}
    return out


def disc_current_pairing(spectrum_dr: np.ndarray, radius: float, grid: Grid) -> complex:
    """``-i R int J1(R|xi|) <F(alpha), d/dr> dxi`` for a 1-form with spectrum ``spectrum_dr * d/dr``."""
    rho = grid.freq_radius()
    return complex(-1j * radius * grid.integrate_freq(special.j1(radius * rho) * spectrum_dr))


def disc_interior_pairing(scalar_spectrum: np.ndarray, radius: float, grid: Grid) -> complex:
    """``int scalar_hat * R J1(R|xi|)/|xi| dxi``: the same quantity after cancelling the radial factor."""
    rho = grid.freq_radius()
    safe = np.where(rho > 0, rho, 1.0)
    prof = np.where(rho > 0, radius * special.j1(radius * safe) / safe, 0.5 * radius ** 2)
    return complex(grid.integrate_freq(prof * scalar_spectrum))
