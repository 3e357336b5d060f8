"""Demo problems: Kelvin circulation on a disc and the resonant square cavity."""
from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg, special

from . import frame_transforms as ft
from .fields import Grid
from .form_wavelets import FormAtomIndex, eval_space_form, exterior_derivative_atom, galerkin_laplacian
from .scalar_polarlets import ScalarAtomIndex, orientation_count
from .windows import WindowSet

log = logging.getLogger(__name__)


# ---------------------------------------------------------------------------
# Kelvin circulation

@dataclass(frozen=True)
class GaussianVortex:
    """Vorticity ``strength * N(center, sigma^2)`` in the plane."""
    center: tuple = (0.0, 0.0)
    sigma: float = 0.1
    strength: float = 1.0

    def spectrum(self, grid: Grid) -> np.ndarray:
        xi = grid.freq_points()
        rho2 = np.sum(xi ** 2, axis=-1)
        c = np.asarray(self.center, dtype=float)
        return self.strength / (2 * math.pi) * np.exp(-0.5 * self.sigma ** 2 * rho2 - 1j * (xi @ c))

    def disc_flux(self, radius: float, disc_center=(0.0, 0.0), nodes: int = 400) -> float:
        """Exact ``int_disc vorticity`` from the radial Rice density (independent of any grid)."""
        d = float(np.linalg.norm(np.subtract(self.center, disc_center)))
        s2 = self.sigma ** 2
        x, w = np.polynomial.legendre.leggauss(nodes)
        r = 0.5 * radius * (x + 1)
        # exp(-(r^2 + d^2)/2s2) I0(r d / s2), written with the scaled i0e
        dens = np.exp(-((r - d) ** 2) / (2 * s2)) * special.i0e(r * d / s2) * r / s2
        return float(self.strength * 0.5 * radius * np.sum(w * dens))

    def rotated(self, angle: float) -> "GaussianVortex":
        return GaussianVortex(tuple(_rotate(self.center, angle)), self.sigma, self.strength)


def _rotate(p, angle):
    c, s = math.cos(angle), math.sin(angle)
    return np.array([c * p[0] - s * p[1], s * p[0] + c * p[1]])


def velocity_coefficients(vorticity: np.ndarray, grid: Grid, windows: WindowSet, levels: int) -> ft.FrameCoefficients:
    """Co-exact 1-form coefficients of the velocity whose curl is ``vorticity`` (given as a spectrum).

    The H1 pairing of ``u`` with a co-exact atom equals the L2 pairing of
    ``du`` with its exterior derivative, so they are the exact 2-form
    coefficients of the vorticity, relabelled. A periodic velocity only
    carries zero-mean vorticity, so the mean is dropped first.
    """
    frame = ft.FormFrame(grid, windows, levels, 2)
    vorticity = np.array(vorticity, dtype=complex)
    vorticity[(0,) * grid.dim] = 0.0
    zeta = frame.analyze_spectrum({(): vorticity}, [("d", 1)])
    bands = {("delta", a, j, t): c for (_, a, j, t), c in zeta.bands.items()}
    return ft.FrameCoefficients(2, 1, levels, grid, bands, {"delta": "h1"}, zeta.config, zeta.leakage)


@dataclass
class CirculationRow:
    levels: int
    boundary: float
    interior: float
    stokes_gap: float
    circulation: float
    residual: float


def circulation_study(vortex: GaussianVortex, radius: float, levels, windows: WindowSet,
                      grid: Grid | None = None, disc_center=(0.0, 0.0)) -> list[CirculationRow]:
    """Truncated frame sums of the circulation around a disc for each ``J`` in ``levels``.

    ``residual`` is relative to the exact circulation of the grid-periodic
    velocity field, i.e. the flux of the zero-mean vorticity through the disc.
    """
    levels = sorted(levels)
    grid = grid or Grid(2, 512, 16.0)
    top = levels[-1]
    alpha = velocity_coefficients(vortex.spectrum(grid), grid, windows, top)
    shape = ft.CharacteristicShape("disc", tuple(disc_center), radius)
    table = ft.stokes_residual(alpha, shape, windows)
    # circulation of the periodic velocity: flux of (vorticity - mean) through the disc
    exact = vortex.disc_flux(radius, disc_center) - vortex.strength * math.pi * radius ** 2 / grid.extent ** 2
    rows = []
    for J in levels:
        entry = table[J]
        b = entry["boundary"].real
        scale = abs(exact) if exact else 1.0
        rows.append(CirculationRow(J, b, entry["interior"].real, entry["residual"], exact, abs(b - exact) / scale))
    return rows


def write_rows(rows, path):
    if not rows:
        raise ValueError("nothing to write")
    names = list(rows[0].__dataclass_fields__)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(names)
        for row in rows:
            w.writerow([f"{v:.17g}" if isinstance(v, float) else v for v in (getattr(row, n) for n in names)])


# ---------------------------------------------------------------------------
# Resonant cavity

@dataclass(frozen=True)
class CavityProblem:
    side: float = math.pi
    levels: int = 2
    count: int = 6
    penalty: float = 1e6
    nodes: int | None = None   # Gauss-Legendre nodes per axis; None picks from the finest level
    margin: float = 0.5        # atom centres up to this far outside the square

    def __post_init__(self):
        if self.levels < 1:
            raise ValueError("the cavity needs at least one wavelet level")
        if self.count < 1:
            raise ValueError("request at least one eigenvalue")
        if self.side <= 0 or self.penalty <= 0:
            raise ValueError("side and penalty must be positive")

    def node_count(self) -> int:
        if self.nodes:
            return int(self.nodes)
        # highest frequency of a product of finest-level atoms, resolved with margin
        top = 2.0 * math.pi * 2.0 ** (self.levels - 1)
        return int(math.ceil(top * self.side / math.pi)) + 32


def cavity_reference(count: int, side: float = math.pi) -> np.ndarray:
    """Maxwell eigenvalues of the square: ``(m^2 + n^2) (pi / side)^2``, ``(m, n) != (0, 0)``."""
    top = int(math.isqrt(count)) + 3
    vals = sorted((m * m + n * n) * (math.pi / side) ** 2
                  for m in range(top + 1) for n in range(top + 1) if m or n)
    return np.array(vals[:count])


@dataclass
class CavityResult:
    eigenvalues: np.ndarray
    vectors: np.ndarray
    atoms: list
    leakage: np.ndarray
    residual: float
    reference: np.ndarray
    basis_rank: int
    zero_fraction: float = float("nan")
    predicted_zero_fraction: float = float("nan")
    extra: dict = field(default_factory=dict)


def cavity_atoms(problem: CavityProblem, windows: WindowSet) -> list:
    """Co-exact 1-form atoms centred in the square dilated by ``margin``."""
    out = []
    reach = problem.side / 2 + problem.margin
    for j in range(-1, problem.levels):
        step = 1.0 if j < 0 else 2.0 ** -j
        top = int(math.floor(reach / step + 1e-12))
        ks = range(-top, top + 1)
        for t in range(1, orientation_count(windows, 2, j) + 1):
            for k1 in ks:
                for k2 in ks:
                    out.append(FormAtomIndex(ScalarAtomIndex(2, j, (k1, k2), t), 1, "delta", 1))
    return out


def _gauss_square(half: float, nodes: int):
    x, w = np.polynomial.legendre.leggauss(nodes)
    x, w = half * x, half * w
    pts = np.stack(np.meshgrid(x, x, indexing="ij"), -1).reshape(-1, 2)
    return x, w, pts, np.outer(w, w).ravel()


def _edge_points(x, half):
    """Nodes on the four edges with the index of the tangential component."""
    edges = []
    for sgn in (-1.0, 1.0):
        edges.append((np.stack([np.full_like(x, sgn * half), x], -1), 1))
        edges.append((np.stack([x, np.full_like(x, sgn * half)], -1), 0))
    return edges


def cavity_solve(problem: CavityProblem, windows: WindowSet, rank_tol: float = 1e-9) -> CavityResult:
    """Rayleigh-Ritz for ``delta d E = lambda E`` on co-exact fields in the square.

    Mass and stiffness are integrated over the square by tensor
    Gauss-Legendre quadrature of the closed-form atoms; the curl of a
    co-exact atom is the exact 2-form atom of the same index. Vanishing
    tangential trace is imposed by a boundary penalty. The frame is
    redundant, so the pencil is reduced to the numerical range of the mass
    matrix before the symmetric solve.
    """
    atoms = cavity_atoms(problem, windows)
    half = problem.side / 2
    n = problem.node_count()
    x, w, pts, wts = _gauss_square(half, n)
    edges = _edge_points(x, half)
    m = len(atoms)
    comps = np.empty((2, m, pts.shape[0]))
    curl = np.empty((m, pts.shape[0]))
    traces = [np.empty((m, n)) for _ in edges]
    for q, idx in enumerate(atoms):
        vals = eval_space_form(idx, windows, pts)
        comps[0, q], comps[1, q] = vals[(0,)], vals[(1,)]
        curl[q] = eval_space_form(exterior_derivative_atom(idx), windows, pts)[(0, 1)]
        for e, (epts, c) in enumerate(edges):
            traces[e][q] = eval_space_form(idx, windows, epts)[(c,)]

    mass = sum((comps[c] * wts) @ comps[c].T for c in range(2))
    stiff = (curl * wts) @ curl.T
    bmat = sum((tr * w) @ tr.T for tr in traces)
    stiff = stiff + problem.penalty * bmat
    del comps, curl

    mass = 0.5 * (mass + mass.T)
    stiff = 0.5 * (stiff + stiff.T)
    mvals, mvecs = linalg.eigh(mass)
    keep = mvals > rank_tol * mvals[-1]
    basis = mvecs[:, keep] / np.sqrt(mvals[keep])
    reduced = basis.T @ stiff @ basis
    reduced = 0.5 * (reduced + reduced.T)
    lam, y = linalg.eigh(reduced)
    # relative to the operator norm: the penalty makes the entries large
    resid = float(np.max(np.linalg.norm(reduced @ y - y * lam, axis=0))) / float(np.max(np.abs(lam)))
    count = min(problem.count, lam.size)
    coeffs = basis @ y[:, :count]

    leak = cavity_leakage(atoms, coeffs, windows, problem.side, n)
    zero_frac, predicted = level_sparsity(atoms)
    return CavityResult(lam[:count], coeffs, atoms, leak, resid,
                        cavity_reference(count, problem.side), int(keep.sum()), zero_frac, predicted,
                        {"atoms": m, "nodes": n, "penalty": problem.penalty})


def cavity_leakage(atoms, coeffs, windows: WindowSet, side: float, nodes: int) -> np.ndarray:
    """Fraction of each eigenfield's energy in ``[-side, side]^2`` that lies outside the square.

    Co-exact scaling-band atoms decay like ``1/|x|`` and have no finite
    energy on the whole plane, so the metric uses a bounded box.
    """
    x, w = np.polynomial.legendre.leggauss(nodes)
    # four panels per axis: the square edges are panel boundaries
    cuts = np.array([-side, -side / 2, 0.0, side / 2, side])
    xs = np.concatenate([0.5 * (b - a) * x + 0.5 * (a + b) for a, b in zip(cuts[:-1], cuts[1:])])
    ws = np.concatenate([0.5 * (b - a) * w for a, b in zip(cuts[:-1], cuts[1:])])
    pts = np.stack(np.meshgrid(xs, xs, indexing="ij"), -1).reshape(-1, 2)
    wts = np.outer(ws, ws).ravel()
    inside = np.all(np.abs(pts) <= side / 2, axis=-1)
    acc = np.zeros((coeffs.shape[1], 2, pts.shape[0]))
    for q, idx in enumerate(atoms):
        vals = eval_space_form(idx, windows, pts)
        acc[:, 0] += coeffs[q, :, None] * vals[(0,)]
        acc[:, 1] += coeffs[q, :, None] * vals[(1,)]
    energy = np.sum(acc ** 2, axis=1) * wts
    total = energy.sum(axis=1)
    return (total - energy[:, inside].sum(axis=1)) / total


def level_sparsity(atoms) -> tuple[float, float]:
    """Zero fraction of the whole-plane Laplace-de Rham matrix forced by level separation, and its prediction."""
    levels = np.array([a.scalar.level for a in atoms])
    m = len(levels)
    if m == 0:
        return 0.0, 0.0
    far = np.abs(levels[:, None] - levels[None, :]) > 1
    counts = {j: int(np.sum(levels == j)) for j in set(levels.tolist())}
    predicted = sum(counts[a] * counts[b] for a in counts for b in counts if abs(a - b) > 1) / m ** 2
    return float(np.mean(far)), float(predicted)


def cavity_laplacian(atoms, windows: WindowSet) -> np.ndarray:
    """Whole-plane ``D_qp`` of the selected atoms (exact zeros across non-adjacent levels)."""
    return galerkin_laplacian(atoms, atoms, windows)
