"""Independent reference computations shared by the test modules."""
import math

import numpy as np

from psiec import exterior_ft as eft


def periodized(func, pts, extent, images):
    """Sum of ``func`` over the periodic images within ``images`` periods per axis."""
    dim = pts.shape[-1]
    total = 0.0
    for shift in np.ndindex(*([2 * images + 1] * dim)):
        total = total + func(pts + extent * (np.array(shift) - images))
    return total


def periodized_form(func, pts, extent, images):
    dim = pts.shape[-1]
    total = {}
    for shift in np.ndindex(*([2 * images + 1] * dim)):
        for J, v in func(pts + extent * (np.array(shift) - images)).items():
            total[J] = total.get(J, 0.0) + v
    return total


def inverse_fft_form(spectrum: dict, grid, degree):
    """Spatial components from Cartesian frequency components, inverting the basis table by hand."""
    out = {}
    for K, spec in spectrum.items():
        J = tuple(i for i in range(grid.dim) if i not in K)
        image = eft.ft_basis(J, grid.dim)
        (term, sign), = image.terms.items()
        assert term.mono == tuple(K)
        out[J] = grid.to_space(spec) / sign.real
    assert all(len(J) == degree for J in out)
    return out


def polar_rule_2d(rho_breaks, radial_nodes=64, angles=128):
    """Gauss-Legendre in radius (piecewise) times trapezoid in angle: points and weights."""
    x, w = np.polynomial.legendre.leggauss(radial_nodes)
    rho = np.concatenate([0.5 * (b - a) * x + 0.5 * (a + b) for a, b in zip(rho_breaks[:-1], rho_breaks[1:])])
    wr = np.concatenate([0.5 * (b - a) * w for a, b in zip(rho_breaks[:-1], rho_breaks[1:])])
    th = 2 * math.pi * np.arange(angles) / angles
    pts = rho[:, None, None] * np.stack([np.cos(th), np.sin(th)], -1)[None]
    wts = (wr * rho)[:, None] * np.full(angles, 2 * math.pi / angles)[None]
    return pts, wts


def polar_rule_3d(rho_breaks, radial_nodes=48, polar_nodes=24, azimuths=48):
    x, w = np.polynomial.legendre.leggauss(radial_nodes)
    rho = np.concatenate([0.5 * (b - a) * x + 0.5 * (a + b) for a, b in zip(rho_breaks[:-1], rho_breaks[1:])])
    wr = np.concatenate([0.5 * (b - a) * w for a, b in zip(rho_breaks[:-1], rho_breaks[1:])])
    ct, wt = np.polynomial.legendre.leggauss(polar_nodes)
    ph = 2 * math.pi * np.arange(azimuths) / azimuths
    st = np.sqrt(1 - ct ** 2)
    unit = np.stack([st[:, None] * np.cos(ph), st[:, None] * np.sin(ph), np.broadcast_to(ct[:, None], (polar_nodes, azimuths))], -1)
    pts = rho[:, None, None, None] * unit[None]
    wts = (wr * rho ** 2)[:, None, None] * (wt[:, None] * np.full(azimuths, 2 * math.pi / azimuths))[None]
    return pts, wts


def laplacian_fd(func, x, h=2e-3):
    """``-sum_i d^2/dx_i^2`` of every component by the fourth-order central stencil."""
    x = np.asarray(x, dtype=float)
    base = func(x)
    out = {J: np.zeros_like(v) for J, v in base.items()}
    for i in range(x.shape[-1]):
        e = np.zeros(x.shape[-1])
        e[i] = h
        f2p, f1p, f1m, f2m = func(x + 2 * e), func(x + e), func(x - e), func(x - 2 * e)
        for J in out:
            d2 = (-f2p[J] + 16 * f1p[J] - 30 * base[J] + 16 * f1m[J] - f2m[J]) / (12 * h * h)
            out[J] -= d2
    return out


def gradient_fd(func, x, h=1e-3):
    """Central differences of a scalar function, last axis = direction."""
    x = np.asarray(x, dtype=float)
    out = []
    for i in range(x.shape[-1]):
        e = np.zeros(x.shape[-1])
        e[i] = h
        out.append((-func(x + 2 * e) + 8 * func(x + e) - 8 * func(x - e) + func(x - 2 * e)) / (12 * h))
    return np.stack(out, -1)
