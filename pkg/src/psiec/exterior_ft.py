"""Symbolic exterior algebra for n <= 3 and the Fourier transform of forms.

Spatial forms live on the basis ``dx^{j1} ^ ... ^ dx^{jr}``; their Fourier
images are forms on the frequency basis ``d/dxi^j`` (cartesian frame) or on
the orthonormal frame ``(d/dtheta, d/dr)`` / ``(d/dtheta, d/dphi, d/dr)``
(spherical frame, oriented in that order).  Indices are 0-based internally
and printed 1-based.

A coefficient is an exact complex scalar times a monomial
``xi_1^a1 ... xi_n^an |xi|^b``; this is enough to express the interior
product with ``i xi`` and the radial weights of the wavelet tables exactly.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

FRAMES = ("x", "cartesian", "spherical")


def permutation_sign(seq) -> int:
    """Sign of the permutation that sorts ``seq`` (0 if an entry repeats)."""
    seq = list(seq)
    if len(set(seq)) != len(seq):
        return 0
    sign = 1
    for i in range(len(seq)):
        for j in range(i + 1, len(seq)):
            if seq[i] > seq[j]:
                sign = -sign
    return sign


def merge(a: tuple, b: tuple):
    """Wedge of two sorted basis monomials: ``(sign, sorted indices)``."""
    s = permutation_sign(a + b)
    if s == 0:
        return 0, ()
    return s, tuple(sorted(a + b))


def complement(mono: tuple, n: int) -> tuple:
    return tuple(i for i in range(n) if i not in mono)


def _clean(c: complex) -> complex:
    c = complex(c)
    re_, im_ = c.real, c.imag
    if abs(re_) < 1e-300:
        re_ = 0.0
    if abs(im_) < 1e-300:
        im_ = 0.0
    return complex(re_, im_)


@dataclass(frozen=True)
class Term:
    mono: tuple           # ordered basis indices
    xi: tuple             # exponents of xi_1..xi_n in the coefficient
    rpow: int = 0         # exponent of |xi|


class SymbolicForm:
    """Element of the exterior algebra on one of the bases in :data:`FRAMES`."""

    def __init__(self, dim: int, frame: str, terms: dict | None = None):
        if dim not in (1, 2, 3):
            raise ValueError("dimension must be 1, 2 or 3")
        if frame not in FRAMES:
            raise ValueError(f"unknown frame {frame!r}")
        self.dim = dim
        self.frame = frame
        self.terms: dict[Term, complex] = {}
        for k, v in (terms or {}).items():
            self._add(k, v)

    # -- construction -----------------------------------------------------
    @classmethod
    def monomial(cls, dim, frame, indices=(), coeff=1.0, xi=None, rpow=0):
        indices = tuple(indices)
        s = permutation_sign(indices)
        if s == 0:
            return cls(dim, frame)
        key = Term(tuple(sorted(indices)), tuple(xi) if xi is not None else (0,) * dim, rpow)
        return cls(dim, frame, {key: s * coeff})

    @classmethod
    def scalar(cls, dim, frame, coeff=1.0):
        return cls.monomial(dim, frame, (), coeff)

    @classmethod
    def volume(cls, dim, frame, coeff=1.0):
        return cls.monomial(dim, frame, tuple(range(dim)), coeff)

    def _add(self, key: Term, value):
        if any(i < 0 or i >= self.dim for i in key.mono) or list(key.mono) != sorted(set(key.mono)):
            raise ValueError(f"invalid basis monomial {key.mono}")
        v = _clean(self.terms.get(key, 0.0) + value)
        if v == 0:
            self.terms.pop(key, None)
        else:
            self.terms[key] = v

    def copy(self):
        return SymbolicForm(self.dim, self.frame, dict(self.terms))

    # -- algebra ----------------------------------------------------------
    def _check(self, other):
        if self.dim != other.dim or self.frame != other.frame:
            raise ValueError("forms live on different bases")

    def __add__(self, other):
        self._check(other)
        out = self.copy()
        for k, v in other.terms.items():
            out._add(k, v)
        return out

    def __neg__(self):
        return self.scale(-1.0)

    def __sub__(self, other):
        return self + (-other)

    def scale(self, c, xi=None, rpow: int = 0):
        out = SymbolicForm(self.dim, self.frame)
        for k, v in self.terms.items():
            nxi = tuple(a + b for a, b in zip(k.xi, xi)) if xi is not None else k.xi
            out._add(Term(k.mono, nxi, k.rpow + rpow), v * c)
        return out

    def __rmul__(self, c):
        return self.scale(c)

    def wedge(self, other):
        self._check(other)
        out = SymbolicForm(self.dim, self.frame)
        for (ka, va), (kb, vb) in itertools.product(self.terms.items(), other.terms.items()):
            s, mono = merge(ka.mono, kb.mono)
            if s == 0:
                continue
            xi = tuple(a + b for a, b in zip(ka.xi, kb.xi))
            out._add(Term(mono, xi, ka.rpow + kb.rpow), s * va * vb)
        return out

    def __eq__(self, other):
        if not isinstance(other, SymbolicForm):
            return NotImplemented
        return self.dim == other.dim and self.frame == other.frame and self.terms == other.terms

    def __hash__(self):
        return hash((self.dim, self.frame, frozenset(self.terms.items())))

    def is_zero(self):
        return not self.terms

    @property
    def degrees(self):
        return sorted({len(k.mono) for k in self.terms})

    @property
    def degree(self) -> int:
        d = self.degrees
        if len(d) != 1:
            raise ValueError(f"form is not homogeneous (degrees {d})")
        return d[0]

    def component(self, mono) -> complex:
        """Exact scalar coefficient of a bare basis monomial (no xi factors)."""
        return self.terms.get(Term(tuple(mono), (0,) * self.dim, 0), 0.0)

    # -- printing ---------------------------------------------------------
    def basis_names(self):
        if self.frame == "x":
            return [f"dx{i + 1}" for i in range(self.dim)]
        if self.frame == "cartesian":
            return [f"d/dxi{i + 1}" for i in range(self.dim)]
        return {1: ["d/dr"], 2: ["d/dtheta", "d/dr"], 3: ["d/dtheta", "d/dphi", "d/dr"]}[self.dim]

    def __str__(self):
        if not self.terms:
            return "0"
        names = self.basis_names()
        parts = []
        for k in sorted(self.terms, key=lambda t: (len(t.mono), t.mono, t.xi, t.rpow)):
            parts.append(_format_coeff(self.terms[k], k, self.dim) + _format_mono(k.mono, names, self.frame))
        return " + ".join(parts).replace("+ -", "- ")

    __repr__ = __str__


def _format_scalar(c: complex) -> str:
    def num(x):
        if abs(x - round(x)) < 1e-12:
            return str(int(round(x)))
        return f"{x:.6g}"
    if c.imag == 0:
        return num(c.real)
    if c.real == 0:
        im = num(c.imag)
        return {"1": "i", "-1": "-i"}.get(im, im + "i")
    return f"({num(c.real)}{'+' if c.imag >= 0 else '-'}{num(abs(c.imag))}i)"


def _format_coeff(c, term: Term, dim) -> str:
    s = _format_scalar(c)
    factors = []
    for q, e in enumerate(term.xi):
        if e:
            factors.append(f"xi{q + 1}" + (f"^{e}" if e != 1 else ""))
    if term.rpow:
        factors.append("|xi|" + (f"^{term.rpow}" if term.rpow != 1 else ""))
    if factors:
        if s == "1":
            s = ""
        elif s == "-1":
            s = "-"
        s = s + "*".join(factors) if s in ("", "-") else s + "*" + "*".join(factors)
    return s


def _format_mono(mono, names, frame) -> str:
    if not mono:
        return "" if frame == "x" else "*1"
    return " " + "^".join(names[i] for i in mono)


# ---------------------------------------------------------------------------
# Mixed tensor products and the form-basis exponential

class GradedTensor:
    """Linear combination of ``left (x) right`` basis monomials with the graded
    product ``(a (x) b) ^ (c (x) d) = (-1)^{|c||b|} (a ^ c) (x) (b ^ d)``."""

    def __init__(self, dim: int, terms: dict | None = None):
        self.dim = dim
        self.terms: dict[tuple, complex] = {}
        for k, v in (terms or {}).items():
            self._add(k, v)

    def _add(self, key, value):
        v = _clean(self.terms.get(key, 0.0) + value)
        if v == 0:
            self.terms.pop(key, None)
        else:
            self.terms[key] = v

    @classmethod
    def unit(cls, dim):
        return cls(dim, {((), ()): 1.0})

    @classmethod
    def left(cls, dim, mono, coeff=1.0):
        s = permutation_sign(mono)
        return cls(dim, {(tuple(sorted(mono)), ()): s * coeff}) if s else cls(dim)

    def __add__(self, other):
        out = GradedTensor(self.dim, dict(self.terms))
        for k, v in other.terms.items():
            out._add(k, v)
        return out

    def scale(self, c):
        return GradedTensor(self.dim, {k: v * c for k, v in self.terms.items()})

    def wedge(self, other):
        out = GradedTensor(self.dim)
        for ((a, b), va), ((c, d), vc) in itertools.product(self.terms.items(), other.terms.items()):
            s1, ac = merge(a, c)
            s2, bd = merge(b, d)
            if s1 == 0 or s2 == 0:
                continue
            graded = -1 if (len(c) % 2) * (len(b) % 2) else 1
            out._add((ac, bd), graded * s1 * s2 * va * vc)
        return out

    def __eq__(self, other):
        return isinstance(other, GradedTensor) and self.dim == other.dim and self.terms == other.terms

    def top_left(self):
        """Right factors multiplying the top-degree left monomial."""
        top = tuple(range(self.dim))
        return {b: v for (a, b), v in self.terms.items() if a == top}


def pairing_kernel(dim: int) -> GradedTensor:
    """``sum_q e^q (x) e^q``, the exponent of the form-basis exponential."""
    out = GradedTensor(dim)
    for q in range(dim):
        out._add(((q,), (q,)), 1.0)
    return out


def basis_exponential(dim: int) -> GradedTensor:
    """``exp(sum_q dx^q (x) d/dxi^q)`` expanded with the graded product (no complex unit)."""
    e = pairing_kernel(dim)
    total = GradedTensor.unit(dim)
    power = GradedTensor.unit(dim)
    for k in range(1, dim + 1):
        power = power.wedge(e)
        total = total + power.scale(1.0 / math.factorial(k))
    return total


def ft_basis(mono, dim: int) -> SymbolicForm:
    """Fourier image of ``dx^mono`` as a (signed) frequency monomial.

    Computed by expanding ``dx^mono ^ exp(dx^q (x) d/dxi^q)`` and keeping the
    part of top spatial degree.
    """
    mono = tuple(mono)
    prod = GradedTensor.left(dim, mono).wedge(basis_exponential(dim))
    out = SymbolicForm(dim, "cartesian")
    for right, v in prod.top_left().items():
        out._add(Term(right, (0,) * dim, 0), v)
    return out


def ft_basis_rule(mono, dim: int):
    """Closed-form sign of the Fourier image: ``(sign, complement)`` with
    ``sign = (-1)^{k(k-1)/2} sgn(J, J^c)`` and ``k = n - r``."""
    mono = tuple(sorted(mono))
    comp = complement(mono, dim)
    k = len(comp)
    return (-1) ** (k * (k - 1) // 2) * permutation_sign(mono + comp), comp


def ft_basis_floor_rule(mono, dim: int):
    """Alternative sign rule ``-(-1)^{floor(r/2)} sgn(sigma)``.

    It reproduces the tables in three dimensions but not for 1-forms in the
    plane; kept for the comparison test.
    """
    mono = tuple(sorted(mono))
    comp = complement(mono, dim)
    r = len(mono)
    return -((-1) ** (r // 2)) * permutation_sign(mono + comp), comp


def ift_basis(mono, dim: int) -> SymbolicForm:
    """Inverse transform of ``d/dxi^mono``: ``-[d/dxi^mono ^ exp(d/dxi^q (x) dx^q)]_top``.

    The leading sign is ``(-1)^{n(n-1)/2}``, which is -1 for n = 2, 3; the
    line itself is an optional extension that keeps n = 1 invertible.
    """
    mono = tuple(mono)
    prod = GradedTensor.left(dim, mono).wedge(basis_exponential(dim))
    sign = (-1) ** (dim * (dim - 1) // 2)
    out = SymbolicForm(dim, "x")
    for right, v in prod.top_left().items():
        out._add(Term(right, (0,) * dim, 0), sign * v)
    return out


def fourier_transform(form: SymbolicForm) -> SymbolicForm:
    """Symbolic transform of a spatial form whose coefficients are read as
    Fourier multipliers (an ``xi`` monomial stays attached to the image)."""
    if form.frame != "x":
        raise ValueError("fourier_transform expects a spatial form")
    out = SymbolicForm(form.dim, "cartesian")
    for k, v in form.terms.items():
        for kk, vv in ft_basis(k.mono, form.dim).terms.items():
            out._add(Term(kk.mono, k.xi, k.rpow), v * vv)
    return out


def inverse_fourier_transform(form: SymbolicForm) -> SymbolicForm:
    if form.frame != "cartesian":
        raise ValueError("inverse_fourier_transform expects a cartesian frequency form")
    out = SymbolicForm(form.dim, "x")
    for k, v in form.terms.items():
        for kk, vv in ift_basis(k.mono, form.dim).terms.items():
            out._add(Term(kk.mono, k.xi, k.rpow), v * vv)
    return out


# ---------------------------------------------------------------------------
# Frequency-side operators

def _radial_index(dim: int) -> int:
    return dim - 1


def interior_xi(form: SymbolicForm) -> SymbolicForm:
    """Interior product with ``i xi`` (anti-derivation, contracting the first slot).

    Cartesian frame: ``i xi = sum_q i xi_q e_q``.  Spherical frame:
    ``i xi = i |xi| e_r``, so only monomials carrying the radial leg survive.
    """
    if form.frame == "x":
        raise ValueError("interior_xi acts on frequency forms")
    out = SymbolicForm(form.dim, form.frame)
    for k, v in form.terms.items():
        for pos, idx in enumerate(k.mono):
            sign = -1 if pos % 2 else 1
            rest = k.mono[:pos] + k.mono[pos + 1:]
            if form.frame == "cartesian":
                xi = list(k.xi)
                xi[idx] += 1
                out._add(Term(rest, tuple(xi), k.rpow), sign * 1j * v)
            elif idx == _radial_index(form.dim):
                out._add(Term(rest, k.xi, k.rpow + 1), sign * 1j * v)
    return out


def hodge(form: SymbolicForm) -> SymbolicForm:
    """Euclidean Hodge dual on an orthonormal, positively oriented basis:
    ``*e_K = sgn(K, K^c) e_{K^c}``."""
    out = SymbolicForm(form.dim, form.frame)
    for k, v in form.terms.items():
        comp = complement(k.mono, form.dim)
        out._add(Term(comp, k.xi, k.rpow), permutation_sign(k.mono + comp) * v)
    return out


hodge_freq = hodge


def exterior_derivative_spatial(form: SymbolicForm) -> SymbolicForm:
    """``d`` on a spatial form whose coefficients are Fourier multipliers:
    ``d(a dx^J) = sum_q (i xi_q a) dx^q ^ dx^J``."""
    if form.frame != "x":
        raise ValueError("expects a spatial form")
    out = SymbolicForm(form.dim, "x")
    for k, v in form.terms.items():
        for q in range(form.dim):
            s, mono = merge((q,), k.mono)
            if s == 0:
                continue
            xi = list(k.xi)
            xi[q] += 1
            out._add(Term(mono, tuple(xi), k.rpow), s * 1j * v)
    return out


def codifferential_spatial(form: SymbolicForm) -> SymbolicForm:
    """Adjoint of ``d`` in the Euclidean metric, ``(-1)^{n(r+1)+1} * d *`` per degree."""
    n = form.dim
    out = SymbolicForm(n, "x")
    for r in form.degrees:
        part = SymbolicForm(n, "x", {k: v for k, v in form.terms.items() if len(k.mono) == r})
        sign = (-1) ** (n * (r + 1) + 1)
        out = out + hodge(exterior_derivative_spatial(hodge(part))).scale(sign)
    return out


def derivative_sign(dim: int) -> int:
    """Sign relating the transformed ``d`` to ``interior_xi``: ``F d = s i_{i xi} F``.

    With the basis tables above the sign is ``(-1)^(n-1)``: positive in one and
    three dimensions, negative in the plane.  ``test_exterior_ft`` derives it
    by brute force over all monomials.
    """
    return (-1) ** (dim - 1)


def exterior_derivative_freq(form: SymbolicForm) -> SymbolicForm:
    """Frequency-side exterior derivative, the transform of spatial ``d``."""
    return interior_xi(form).scale(derivative_sign(form.dim))


def codifferential_freq(form: SymbolicForm) -> SymbolicForm:
    """``(-1)^{n-1} * i_{i xi} *``, the displayed frequency-side codifferential."""
    return hodge(interior_xi(hodge(form))).scale((-1) ** (form.dim - 1))


def codifferential_freq_derived(form: SymbolicForm) -> SymbolicForm:
    """Transform of the spatial (adjoint) codifferential, derived as ``F delta F^-1``.

    Only defined on the cartesian frame, where the transform tables apply.
    """
    return fourier_transform(codifferential_spatial(inverse_fourier_transform(form)))


def laplace_freq(form: SymbolicForm, adjoint: bool = True) -> SymbolicForm:
    """``d delta + delta d`` on frequency forms (any frame)."""
    d = exterior_derivative_freq
    delta = codifferential_freq_adjoint if adjoint else codifferential_freq
    return d(delta(form)) + delta(d(form))


def all_monomials(dim: int):
    for r in range(dim + 1):
        for mono in itertools.combinations(range(dim), r):
            yield mono


def evaluate_coefficients(form: SymbolicForm, xi: np.ndarray) -> dict:
    """Numeric coefficient arrays per monomial at frequency points ``xi[..., n]``."""
    xi = np.asarray(xi, dtype=float)
    rad = np.linalg.norm(xi, axis=-1)
    out: dict = {}
    for k, v in form.terms.items():
        val = np.full(xi.shape[:-1], v, dtype=complex)
        for q, e in enumerate(k.xi):
            if e:
                val = val * xi[..., q] ** e
        if k.rpow:
            with np.errstate(divide="ignore", invalid="ignore"):
                val = val * np.where(rad > 0, rad, np.nan) ** k.rpow
        out[k.mono] = out.get(k.mono, 0) + val
    return out


def table_listing(dim: int) -> str:
    """Deterministic listing of the basis transform table."""
    names = SymbolicForm(dim, "x").basis_names()
    lines = [f"Fourier transform of form basis functions in R^{dim}"]
    for mono in all_monomials(dim):
        src = "^".join(names[i] for i in mono) if mono else "1"
        lines.append(f"  F({src}) = {ft_basis(mono, dim)}")
    return "\n".join(lines)


# ---------------------------------------------------------------------------
# Pairings and products

def plancherel_pair(a, b, weight_power: int = 0) -> complex:
    """``<<a, b>> = int a ^ *conj(b)``.

    Symbolic forms with bare scalar coefficients are contracted directly;
    sampled fields use the frequency-side quadrature of :mod:`psiec.fields`.
    """
    if isinstance(a, SymbolicForm):
        if not isinstance(b, SymbolicForm):
            raise TypeError("cannot pair a symbolic form with a sampled field")
        a._check(b)
        total = 0j
        for k, v in a.terms.items():
            if any(k.xi) or k.rpow:
                raise ValueError("symbolic pairing needs bare scalar coefficients")
            total += v * np.conj(b.terms.get(k, 0.0))
        return complex(total)
    from . import fields
    return fields.pairing_freq(a, b, weight_power)


def wedge_sampled(a, b):
    from . import fields
    return fields.wedge_field(a, b)


def codifferential_freq_adjoint(form: SymbolicForm) -> SymbolicForm:
    """Codifferential that is the transform of the adjoint of ``d``.

    On frequency ``k``-forms it equals ``(-1)^{nk+1} * i_{i xi} *``.  It agrees
    with :func:`codifferential_freq` except in odd dimension on frequency
    forms of even degree, and works in the spherical frame as well.
    """
    n = form.dim
    out = SymbolicForm(n, form.frame)
    for k in form.degrees:
        part = SymbolicForm(n, form.frame, {t: v for t, v in form.terms.items() if len(t.mono) == k})
        out = out + hodge(interior_xi(hodge(part))).scale((-1) ** (n * k + 1))
    return out
