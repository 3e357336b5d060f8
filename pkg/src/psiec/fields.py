"""Periodic sampling grids and sampled differential forms.

Samples sit at ``x_i = (i - N/2) * dx`` along each axis, ``dx = extent / N``.
The transforms below are the unitary continuous transform evaluated by the
FFT, so frequency arrays carry the same units as the analytic spectra.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from . import exterior_ft as eft


@dataclass(frozen=True)
class Grid:
    dim: int
    size: int
    extent: float

    def __post_init__(self):
        if self.dim not in (1, 2, 3):
            raise ValueError("grid dimension must be 1, 2 or 3")
        if self.size < 2 or self.size & (self.size - 1):
            raise ValueError("grid size must be a power of two")
        if not self.extent > 0:
            raise ValueError("grid extent must be positive")

    @property
    def spacing(self) -> float:
        return self.extent / self.size

    @property
    def shape(self):
        return (self.size,) * self.dim

    @property
    def nyquist(self) -> float:
        return math.pi / self.spacing

    def axis(self) -> np.ndarray:
        return (np.arange(self.size) - self.size // 2) * self.spacing

    def freq_axis(self) -> np.ndarray:
        return 2 * math.pi * np.fft.fftfreq(self.size, self.spacing)

    def mesh(self):
        return np.meshgrid(*([self.axis()] * self.dim), indexing="ij")

    def freq_mesh(self):
        return np.meshgrid(*([self.freq_axis()] * self.dim), indexing="ij")

    def points(self) -> np.ndarray:
        return np.stack(self.mesh(), axis=-1)

    def freq_points(self) -> np.ndarray:
        return np.stack(self.freq_mesh(), axis=-1)

    def freq_radius(self) -> np.ndarray:
        return np.sqrt(sum(k * k for k in self.freq_mesh()))

    def to_freq(self, values) -> np.ndarray:
        scale = self.spacing ** self.dim / (2 * math.pi) ** (self.dim / 2)
        return scale * np.fft.fftn(np.fft.ifftshift(values))

    def to_space(self, spectrum) -> np.ndarray:
        scale = (2 * math.pi) ** (self.dim / 2) / self.spacing ** self.dim
        return scale * np.fft.fftshift(np.fft.ifftn(spectrum))

    def integrate(self, values):
        return np.sum(values) * self.spacing ** self.dim

    def integrate_freq(self, values):
        return np.sum(values) * (2 * math.pi / self.extent) ** self.dim

    def index_of(self, x) -> tuple:
        """Grid index of the sample nearest to the point ``x``."""
        return tuple(int(round(c / self.spacing)) + self.size // 2 for c in np.atleast_1d(x))


def monomials(dim: int, degree: int):
    return list(itertools.combinations(range(dim), degree))


def component_label(mono) -> str:
    return "c_" + "".join(str(i + 1) for i in mono) if mono else "c_0"


@dataclass
class SampledFormField:
    """Real ``r``-form sampled on a grid, one array per ordered index set."""
    grid: Grid
    degree: int
    components: dict = field(default_factory=dict)

    def __post_init__(self):
        if not 0 <= self.degree <= self.grid.dim:
            raise ValueError("form degree out of range")
        expected = monomials(self.grid.dim, self.degree)
        for mono in expected:
            arr = self.components.get(mono)
            if arr is None:
                self.components[mono] = np.zeros(self.grid.shape)
            elif np.shape(arr) != self.grid.shape:
                raise ValueError(f"component {mono} has shape {np.shape(arr)}, expected {self.grid.shape}")
        extra = set(self.components) - set(expected)
        if extra:
            raise ValueError(f"components {sorted(extra)} do not match degree {self.degree}")

    @classmethod
    def zeros(cls, grid: Grid, degree: int):
        return cls(grid, degree, {})

    @property
    def dim(self) -> int:
        return self.grid.dim

    def labels(self):
        return [component_label(m) for m in monomials(self.dim, self.degree)]

    def stacked(self) -> np.ndarray:
        return np.stack([self.components[m] for m in monomials(self.dim, self.degree)])

    def __add__(self, other):
        self._check(other)
        return SampledFormField(self.grid, self.degree,
                                {m: self.components[m] + other.components[m] for m in self.components})

    def __sub__(self, other):
        return self + other.scaled(-1.0)

    def scaled(self, c):
        return SampledFormField(self.grid, self.degree, {m: c * v for m, v in self.components.items()})

    def _check(self, other):
        if other.grid != self.grid:
            raise ValueError("fields live on different grids")
        if other.degree != self.degree:
            raise ValueError("fields have different degrees")

    def norm(self) -> float:
        return math.sqrt(sum(float(self.grid.integrate(np.abs(v) ** 2)) for v in self.components.values()))

    # frequency side: components on d/dxi monomials of degree n - r
    def spectrum(self) -> dict:
        out = {}
        for mono, arr in self.components.items():
            sign, comp = eft.ft_basis_rule(mono, self.dim)
            out[comp] = sign * self.grid.to_freq(arr)
        return out

    @classmethod
    def from_spectrum(cls, grid: Grid, degree: int, spectrum: dict, imag_tol: float | None = None):
        """Inverse of :meth:`spectrum`; the imaginary part is checked and dropped."""
        comps = {}
        for mono in monomials(grid.dim, degree):
            sign, comp = eft.ft_basis_rule(mono, grid.dim)
            if comp not in spectrum:
                comps[mono] = np.zeros(grid.shape)
                continue
            vals = sign * grid.to_space(spectrum[comp])
            if imag_tol is not None:
                scale = max(float(np.max(np.abs(vals))), 1e-300)
                resid = float(np.max(np.abs(vals.imag))) / scale
                if resid > imag_tol:
                    raise ValueError(f"field is not real: relative imaginary residue {resid:.2e}")
            comps[mono] = vals.real
        return cls(grid, degree, comps)


def hodge_field(f: SampledFormField) -> SampledFormField:
    n = f.dim
    comps = {}
    for mono, arr in f.components.items():
        comp = eft.complement(mono, n)
        comps[comp] = eft.permutation_sign(mono + comp) * arr
    return SampledFormField(f.grid, n - f.degree, comps)


def exterior_derivative_field(f: SampledFormField) -> SampledFormField:
    """Spectral ``d``: ``(d f)_{q J} = sum d_q f_J`` with signs from reordering."""
    n, g = f.dim, f.grid
    if f.degree == n:
        raise ValueError("d of a top-degree form vanishes identically")
    xi = g.freq_mesh()
    out = {m: np.zeros(g.shape, dtype=complex) for m in monomials(n, f.degree + 1)}
    for mono, arr in f.components.items():
        spec = g.to_freq(arr)
        for q in range(n):
            s, new = eft.merge((q,), mono)
            if s:
                out[new] = out[new] + s * 1j * xi[q] * spec
    return SampledFormField(g, f.degree + 1, {m: g.to_space(v).real for m, v in out.items()})


def codifferential_field(f: SampledFormField) -> SampledFormField:
    n, r = f.dim, f.degree
    if r == 0:
        return SampledFormField.zeros(f.grid, 0)
    inner = exterior_derivative_field(hodge_field(f))
    return hodge_field(inner).scaled((-1) ** (n * (r + 1) + 1))


def pairing_space(a: SampledFormField, b: SampledFormField) -> complex:
    """``int a ^ *conj(b)``, i.e. the sum of component-wise L2 products."""
    a._check(b)
    return complex(sum(a.grid.integrate(a.components[m] * np.conj(b.components[m])) for m in a.components))


def pairing_freq(a: SampledFormField, b: SampledFormField, weight_power: int = 0) -> complex:
    """Same pairing computed from the spectra; ``weight_power = 2`` gives the H1-seminorm pairing."""
    a._check(b)
    sa, sb = a.spectrum(), b.spectrum()
    w = a.grid.freq_radius() ** weight_power if weight_power else 1.0
    return complex(sum(a.grid.integrate_freq(w * sa[k] * np.conj(sb[k])) for k in sa))


def wedge_field(a: SampledFormField, b: SampledFormField) -> SampledFormField:
    """Pointwise exterior product of sampled forms."""
    if a.grid != b.grid:
        raise ValueError("fields live on different grids")
    n = a.dim
    r = a.degree + b.degree
    if r > n:
        raise ValueError(f"degree {a.degree} + {b.degree} exceeds dimension {n}")
    out = {m: np.zeros(a.grid.shape) for m in monomials(n, r)}
    for (ma, va), (mb, vb) in itertools.product(a.components.items(), b.components.items()):
        s, mono = eft.merge(ma, mb)
        if s:
            out[mono] = out[mono] + s * va * vb
    return SampledFormField(a.grid, r, out)


def random_spectrum(grid: Grid, cutoff: float, rng: np.random.Generator, taper: float = 0.8) -> np.ndarray:
    """Spectrum of a random real field band-limited to ``|xi| < cutoff``.

    White noise is filtered in frequency by a smooth bump that vanishes
    beyond ``cutoff`` and is flat below ``taper * cutoff``.
    """
    noise = rng.standard_normal(grid.shape)
    spec = grid.to_freq(noise)
    rho = grid.freq_radius() / cutoff
    bump = np.zeros_like(rho)
    flat = rho <= taper
    bump[flat] = 1.0
    ramp = (rho > taper) & (rho < 1.0)
    u = (rho[ramp] - taper) / (1.0 - taper)
    bump[ramp] = np.cos(0.5 * math.pi * u) ** 2
    return spec * bump
