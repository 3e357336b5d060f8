"""Radial and angular localization windows and their admissibility checks."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import specfun

PI = math.pi


# ---------------------------------------------------------------------------
# Radial windows

def _smooth_step(x):
    """C-infinity monotone ramp on [0, 1] with ``s(x) + s(1 - x) = 1``."""
    x = np.clip(np.asarray(x, dtype=float), 0.0, 1.0)
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        a = np.where(x > 0, np.exp(-1.0 / np.where(x > 0, x, 1.0)), 0.0)
        b = np.where(x < 1, np.exp(-1.0 / np.where(x < 1, 1.0 - x, 1.0)), 0.0)
    return a / (a + b)


@dataclass(frozen=True)
class RadialProfile:
    """Dyadic radial window pair: wavelet window ``h_hat`` and scaling window ``g_hat``.

    ``kind`` selects the transition:

    * ``"steerable"``  log-cosine window ``cos(pi/2 log2(2 rho / pi))`` on ``(pi/4, pi)``;
    * ``"smooth"``     same band, with the log-radius passed through a
      C-infinity ramp first (rapid spatial decay);
    * ``"box"``        indicator of ``[pi/2, pi)`` (radial sinc wavelets).
    """
    kind: str = "steerable"

    def __post_init__(self):
        if self.kind not in ("steerable", "smooth", "box"):
            raise ValueError(f"unknown radial window kind {self.kind!r}")

    @property
    def h_support(self):
        return (PI / 2, PI) if self.kind == "box" else (PI / 4, PI)

    @property
    def g_support(self):
        return (0.0, PI / 2)

    @property
    def h_breaks(self):
        return (PI / 2, PI) if self.kind == "box" else (PI / 4, PI / 2, PI)

    @property
    def g_breaks(self):
        return (0.0, PI / 2) if self.kind == "box" else (0.0, PI / 4, PI / 2)

    def _angle(self, u):
        # u = log2(2 rho / pi) in (-1, 1); returns the phase fed to cos
        a = np.abs(u)
        if self.kind == "smooth":
            a = _smooth_step(a)
        return 0.5 * PI * a

    def h_hat(self, rho):
        rho = np.asarray(rho, dtype=float)
        if self.kind == "box":
            return np.where((rho >= PI / 2) & (rho < PI), 1.0, 0.0)
        lo, hi = self.h_support
        inside = (rho > lo) & (rho < hi)
        u = np.log2(2.0 * np.where(inside, rho, PI / 2) / PI)
        return np.where(inside, np.cos(self._angle(u)), 0.0)

    def g_hat(self, rho):
        rho = np.asarray(rho, dtype=float)
        if self.kind == "box":
            return np.where(rho < PI / 2, 1.0, 0.0)
        ramp = (rho > PI / 4) & (rho < PI / 2)
        u = np.log2(2.0 * np.where(ramp, rho, PI / 2) / PI)
        val = np.where(ramp, np.sin(self._angle(u)), 0.0)
        return np.where(rho <= PI / 4, 1.0, val)

    def band(self, level: int, rho):
        """Radial factor of level ``level`` (``-1`` is the scaling band)."""
        if level < 0:
            return self.g_hat(rho)
        return self.h_hat(np.asarray(rho, dtype=float) * 2.0 ** (-level))

    def band_support(self, level: int):
        if level < 0:
            return self.g_support
        lo, hi = self.h_support
        return (lo * 2.0 ** level, hi * 2.0 ** level)

    def to_dict(self):
        return {"kind": self.kind}


def make_steerable_radial(config: dict | None = None) -> RadialProfile:
    """Radial window from a config mapping (``{"kind": ...}``); log-cosine by default."""
    kind = (config or {}).get("kind", "steerable")
    return RadialProfile(kind)


def calderon_sum(profile: RadialProfile, rho) -> np.ndarray:
    """``|g_hat|^2 + sum_{j>=0} |h_hat(2^-j rho)|^2``."""
    rho = np.asarray(rho, dtype=float)
    total = profile.g_hat(rho) ** 2
    top = int(math.ceil(math.log2(max(float(np.max(rho)), 1.0) / (PI / 4)))) + 1 if rho.size else 0
    for j in range(0, top + 1):
        total = total + profile.h_hat(rho * 2.0 ** (-j)) ** 2
    return total


def calderon_check(profile: RadialProfile, levels: int, grid=None) -> float:
    """Maximum partition-of-unity residual over ``grid`` within ``[rho_min, 2^J pi]``."""
    if grid is None:
        grid = np.linspace(0.1, 2.0 ** levels * PI, 20001)
    grid = np.asarray(grid, dtype=float)
    if np.any(grid > 2.0 ** levels * PI * (1 + 1e-12)) or np.any(grid < 0):
        raise ValueError("grid lies outside the band covered by the requested levels")
    return float(np.max(np.abs(calderon_sum(profile, grid) - 1.0)))


# ---------------------------------------------------------------------------
# Admissibility reports

@dataclass
class AdmissibilityReport:
    passed: bool
    max_offdiag: float = 0.0
    trace_error: float = 0.0
    failure: str | None = None
    details: dict = field(default_factory=dict)

    def __bool__(self):
        return self.passed

    def summary(self) -> str:
        state = "pass" if self.passed else "FAIL"
        msg = f"{state}: off-diagonal {self.max_offdiag:.3e}, trace error {self.trace_error:.3e}"
        if self.failure:
            msg += f" ({self.failure})"
        return msg


# ---------------------------------------------------------------------------
# Angular windows in the plane

@dataclass
class AngularWindow2D:
    """Fourier-series direction window ``sum_n beta_n e^{i n theta}``, steered to
    ``orientations`` equally spaced angles ``2 pi t / T``, ``t = 1..T``."""
    beta: np.ndarray          # coefficients for n = -N..N
    orientations: int = 1

    def __post_init__(self):
        self.beta = np.asarray(self.beta, dtype=complex).ravel()
        if self.beta.size % 2 != 1:
            raise ValueError("beta must hold 2N+1 coefficients (n = -N..N)")

    @property
    def order(self) -> int:
        return self.beta.size // 2

    @property
    def harmonics(self) -> np.ndarray:
        return np.arange(-self.order, self.order + 1)

    def coefficients(self, t: int) -> np.ndarray:
        """``beta_n^t = beta_n exp(-i n t 2 pi / T)``."""
        return self.beta * np.exp(-1j * self.harmonics * t * 2 * PI / self.orientations)

    def angle(self, t: int) -> float:
        return 2 * PI * t / self.orientations

    def evaluate(self, t: int, theta) -> np.ndarray:
        theta = np.asarray(theta, dtype=float)
        b = self.coefficients(t)
        return np.tensordot(b, np.exp(1j * np.multiply.outer(self.harmonics, theta)), axes=1)

    def steering_matrix(self) -> np.ndarray:
        """``U[t-1, n] = beta_n^t``, shape ``(T, 2N+1)``."""
        return np.stack([self.coefficients(t) for t in range(1, self.orientations + 1)])

    def rotated(self, angle: float) -> "AngularWindow2D":
        return AngularWindow2D(self.beta * np.exp(-1j * self.harmonics * angle), self.orientations)

    def to_dict(self):
        return {"kind": "fourier", "beta_real": self.beta.real.tolist(),
                "beta_imag": self.beta.imag.tolist(), "orientations": self.orientations}


def isotropic_2d() -> AngularWindow2D:
    return AngularWindow2D(np.array([1.0]), 1)


def cosine_power_2d(order: int = 2, orientations: int | None = None, normalize: bool = True) -> AngularWindow2D:
    """``cos^N(theta)`` direction window with ``T`` orientations (default ``2N+1``)."""
    if orientations is None:
        orientations = 2 * order + 1
    beta = np.zeros(2 * order + 1, dtype=complex)
    for k in range(order + 1):
        n = order - 2 * k
        beta[n + order] += math.comb(order, k) / 2.0 ** order
    if normalize:
        beta = beta / math.sqrt(orientations * float(np.sum(np.abs(beta) ** 2)))
    return AngularWindow2D(beta, orientations)


def admissibility_2d(window: AngularWindow2D, tol: float = 1e-12) -> AdmissibilityReport:
    """Steering condition: ``U^H U`` diagonal with unit trace."""
    u = window.steering_matrix()
    gram = u.conj().T @ u
    off = gram - np.diag(np.diag(gram))
    max_off = float(np.max(np.abs(off))) if off.size else 0.0
    trace_err = abs(complex(np.trace(gram)) - 1.0)
    failure = None
    if max_off > tol:
        i, k = np.unravel_index(np.argmax(np.abs(off)), off.shape)
        n = window.harmonics
        failure = f"off-diagonal entry (n={n[i]}, n'={n[k]}) = {abs(off[i, k]):.3e}"
    elif trace_err > tol:
        failure = f"trace {np.trace(gram).real:.6f} != 1"
    real_err = float(np.max(np.abs(window.beta[::-1] - np.conj(window.beta))))
    if failure is None and real_err > tol:
        failure = f"window not real: |beta_-n - conj(beta_n)| = {real_err:.3e}"
    return AdmissibilityReport(failure is None, max_off, trace_err, failure, {"realness": real_err})


# ---------------------------------------------------------------------------
# Angular windows on the sphere

def icosahedral_axes(tilt: float = 0.3) -> np.ndarray:
    """Six axes through antipodal icosahedron vertices, tilted off the poles."""
    g = (1 + math.sqrt(5)) / 2
    v = np.array([[0, 1, g], [0, -1, g], [1, g, 0], [-1, g, 0], [g, 0, 1], [g, 0, -1]], dtype=float)
    v /= np.linalg.norm(v, axis=1, keepdims=True)
    c, s = math.cos(tilt), math.sin(tilt)
    rot_x = np.array([[1, 0, 0], [0, c, -s], [0, s, c]])
    rot_y = np.array([[c, 0, s], [0, 1, 0], [-s, 0, c]])
    return v @ (rot_y @ rot_x).T


@dataclass
class AngularWindow3D:
    """Direction window ``sum_lm kappa_lm y_lm`` per orientation.

    ``kappa`` has shape ``(T, (L+1)^2)`` in the flat ``lm`` layout of
    :func:`psiec.specfun.lm_index`.  ``centers`` records the orientation axes
    (``None`` for non-zonal input).  ``polar_factor`` multiplies the window by
    ``sin(theta)``: such windows vanish at the poles of the spherical frame,
    which makes the tangential form atoms smooth, but they are not tight.
    """
    kappa: np.ndarray
    centers: np.ndarray | None = None
    polar_factor: bool = False

    def __post_init__(self):
        self.kappa = np.atleast_2d(np.asarray(self.kappa, dtype=complex))
        n = self.kappa.shape[1]
        L = int(round(math.sqrt(n))) - 1
        if (L + 1) ** 2 != n:
            raise ValueError("kappa rows must have (L+1)^2 entries")

    @property
    def max_degree(self) -> int:
        return int(round(math.sqrt(self.kappa.shape[1]))) - 1

    @property
    def orientations(self) -> int:
        return self.kappa.shape[0]

    def evaluate(self, t: int, unit) -> np.ndarray:
        """Window value at unit vectors ``unit[..., 3]`` (``t`` is 1-based)."""
        unit = np.asarray(unit, dtype=float)
        y = specfun.sph_harm_cartesian(self.max_degree, unit)
        val = np.tensordot(self.kappa[t - 1], y, axes=1)
        if self.polar_factor:
            val = val * np.sqrt(np.clip(1.0 - unit[..., 2] ** 2, 0.0, None))
        return val

    def to_dict(self):
        out = {"kind": "harmonic", "kappa_real": self.kappa.real.tolist(),
               "kappa_imag": self.kappa.imag.tolist(), "polar_factor": self.polar_factor}
        if self.centers is not None:
            out["centers"] = np.asarray(self.centers).tolist()
        return out


def rotate_zonal(zonal: np.ndarray, direction) -> np.ndarray:
    """Harmonic coefficients of the zonal window ``sum_l zonal[l] y_l0`` turned to ``direction``."""
    zonal = np.asarray(zonal, dtype=float)
    L = zonal.size - 1
    out = np.zeros((L + 1) ** 2, dtype=complex)
    for l in range(L + 1):
        if zonal[l] == 0:
            continue
        for m in range(-l, l + 1):
            out[specfun.lm_index(l, m)] = zonal[l] * specfun.wigner_zonal(l, m, direction)
    return out


def isotropic_3d() -> AngularWindow3D:
    kappa = np.zeros((1, 1), dtype=complex)
    kappa[0, 0] = math.sqrt(4 * PI)
    return AngularWindow3D(kappa, np.array([[0.0, 0.0, 1.0]]))


def zonal_power_coefficients(power: int) -> np.ndarray:
    """Zonal coefficients of ``(omega . e3)^power`` (``y_l0`` basis)."""
    rule = specfun.SphereQuadrature.exact_to(2 * power + 2)
    f = np.cos(rule.theta) ** power
    c = specfun.project_harmonics(f, rule, power)
    zonal = np.array([c[specfun.lm_index(l, 0)].real for l in range(power + 1)])
    zonal[np.abs(zonal) < 1e-14] = 0.0
    return zonal


def directional_3d(power: int = 2, centers=None, normalize: bool = True, polar_factor: bool = False) -> AngularWindow3D:
    """Zonal ``(omega . lambda_t)^power`` windows on the given axes.

    With the default six icosahedral axes and ``power = 2`` the squared
    windows sum to a constant (the axes form a spherical 4-design up to
    antipodal symmetry), so the family is admissible after normalization.
    """
    if centers is None:
        centers = icosahedral_axes()
    centers = np.asarray(centers, dtype=float)
    zonal = zonal_power_coefficients(power)
    kappa = np.stack([rotate_zonal(zonal, c) for c in centers])
    if normalize:
        rule = specfun.SphereQuadrature.exact_to(4 * power + 2)
        pts = rule.points
        energy = sum(np.abs((pts @ c) ** power) ** 2 for c in centers)
        kappa = kappa / math.sqrt(float(np.mean(energy)))
    return AngularWindow3D(kappa, centers, polar_factor)


def admissibility_3d(window: AngularWindow3D, gaunt: specfun.GauntTable | None = None,
                     tol: float = 1e-10) -> AdmissibilityReport:
    """Harmonic form of ``sum_t |gamma_t|^2 = 1`` via Gaunt contraction.

    For each ``(l, m)`` with ``l <= 2L`` evaluates
    ``A_lm = (4 pi)^(-1/2) sum_t sum kappa_l1m1 conj(kappa_l2m2) (-1)^m2 G(l1,m1; l2,-m2 | l, m1-m2)``
    and requires ``A_lm = delta_l0 delta_m0``.
    """
    if window.polar_factor:
        return AdmissibilityReport(False, float("nan"), float("nan"),
                                   "windows with a polar factor vanish at the poles and cannot be tight")
    L = window.max_degree
    if gaunt is None:
        gaunt = specfun.gaunt_table(2 * L)
    if gaunt.max_degree < 2 * L:
        raise ValueError(f"Gaunt table degree {gaunt.max_degree} < 2L = {2 * L}")
    pairs = specfun.lm_pairs(L)
    n = len(pairs)
    # conj(y_l2m2) = (-1)^m2 y_{l2,-m2}; reorder conj(kappa) onto the y_{l2,-m2} slots
    flip = np.array([specfun.lm_index(l, -m) for l, m in pairs])
    sign = np.array([(-1.0) ** m for _, m in pairs])
    acc = np.zeros((2 * L + 1) ** 2, dtype=complex)
    table = gaunt.table[:n, :n, :(2 * L + 1) ** 2]
    for row in window.kappa:
        conj_row = np.zeros(n, dtype=complex)
        conj_row[flip] = np.conj(row) * sign
        acc += np.einsum("i,j,ijk->k", row, conj_row, table)
    acc /= math.sqrt(4 * PI)
    target = np.zeros_like(acc)
    target[0] = 1.0
    err = np.abs(acc - target)
    trace_err = float(err[0])
    off = float(np.max(err[1:])) if err.size > 1 else 0.0
    failure = None
    if err.max() > tol:
        k = int(np.argmax(err > tol))
        l = int(math.isqrt(k))
        m = k - l * l - l
        failure = f"condition violated at (l={l}, m={m}): value {acc[k].real:+.6e}{acc[k].imag:+.6e}j"
    return AdmissibilityReport(failure is None, off, trace_err, failure, {"coefficients": acc})


# ---------------------------------------------------------------------------
# Configuration

@dataclass
class WindowSet:
    """Radial profile together with the planar and spherical direction windows."""
    radial: RadialProfile
    angular2d: AngularWindow2D
    angular3d: AngularWindow3D

    def angular(self, dim: int):
        return self.angular2d if dim == 2 else self.angular3d

    def to_dict(self):
        return {"radial": self.radial.to_dict(), "angular2d": self.angular2d.to_dict(),
                "angular3d": self.angular3d.to_dict()}


def _angular2d_from(cfg: dict) -> AngularWindow2D:
    kind = cfg.get("kind", "isotropic")
    if kind == "isotropic":
        return isotropic_2d()
    if kind == "cosine_power":
        return cosine_power_2d(int(cfg.get("order", 2)), cfg.get("orientations"),
                               bool(cfg.get("normalize", True)))
    if kind == "fourier":
        beta = np.asarray(cfg["beta_real"], dtype=float) + 1j * np.asarray(cfg.get("beta_imag", 0.0))
        return AngularWindow2D(beta, int(cfg.get("orientations", 1)))
    raise ValueError(f"unknown angular2d kind {kind!r}")


def _angular3d_from(cfg: dict) -> AngularWindow3D:
    kind = cfg.get("kind", "isotropic")
    if kind == "isotropic":
        return isotropic_3d()
    if kind == "zonal_power":
        centers = cfg.get("centers")
        if centers is None and "tilt" in cfg:
            centers = icosahedral_axes(float(cfg["tilt"]))
        return directional_3d(int(cfg.get("power", 2)), centers, bool(cfg.get("normalize", True)),
                              bool(cfg.get("polar_factor", False)))
    if kind == "harmonic":
        kappa = np.asarray(cfg["kappa_real"], dtype=float) + 1j * np.asarray(cfg.get("kappa_imag", 0.0))
        return AngularWindow3D(kappa, cfg.get("centers"), bool(cfg.get("polar_factor", False)))
    raise ValueError(f"unknown angular3d kind {kind!r}")


def window_set_from_dict(cfg: dict) -> WindowSet:
    if not isinstance(cfg, dict):
        raise ValueError("window configuration must be a JSON object")
    unknown = set(cfg) - {"radial", "angular2d", "angular3d"}
    if unknown:
        raise ValueError(f"unknown configuration keys: {sorted(unknown)}")
    return WindowSet(make_steerable_radial(cfg.get("radial")),
                     _angular2d_from(cfg.get("angular2d", {})),
                     _angular3d_from(cfg.get("angular3d", {})))


def load_window_config(path) -> WindowSet:
    with open(path, "r", encoding="utf-8") as fh:
        return window_set_from_dict(json.load(fh))


def shipped_config(name: str) -> Path:
    """Path of a configuration bundled with the package (``isotropic``, ``directional``, ...)."""
    p = Path(__file__).parent / "configs" / f"{name}.json"
    if not p.exists():
        raise FileNotFoundError(p)
    return p


def default_windows(directional: bool = False, kind: str = "smooth") -> WindowSet:
    if directional:
        return WindowSet(RadialProfile(kind), cosine_power_2d(2), directional_3d(2))
    return WindowSet(RadialProfile(kind), isotropic_2d(), isotropic_3d())
