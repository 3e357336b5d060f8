import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate
from sympy.physics.wigner import gaunt as sympy_gaunt

from psiec import specfun
from psiec.windows import RadialProfile


def bessel_series(m, x, terms=30):
    return sum((-1) ** k * (x / 2) ** (2 * k + m) / (math.factorial(k) * math.gamma(k + m + 1))
               for k in range(terms))


def sphere_grid(n=40):
    # GL in cos(theta) times trapezoid in phi, built here independently of SphereQuadrature
    x, w = np.polynomial.legendre.leggauss(n)
    phi = 2 * np.pi * np.arange(2 * n) / (2 * n)
    th, ph = np.meshgrid(np.arccos(x), phi, indexing="ij")
    return th, ph, np.outer(w, np.full(2 * n, np.pi / n))


def test_bessel_small_values():
    assert specfun.bessel_j(0, 0.0) == 1.0
    assert specfun.bessel_j(1, 0.0) == 0.0


@pytest.mark.parametrize("m,x", [(2, 1.0), (0, 3.7), (5, 2.2), (-3, 1.4)])
def test_bessel_against_power_series(m, x):
    ref = bessel_series(abs(m), x) * (-1) ** (abs(m) if m < 0 else 0)
    assert specfun.bessel_j(m, x) == pytest.approx(ref, rel=1e-13, abs=1e-16)


def test_spherical_bessel_order_zero():
    x = np.array([1e-3, 0.3, 0.49, 0.51, 2.0, 17.5])
    assert np.allclose(specfun.spherical_bessel_j(0, x), np.sin(x) / x, rtol=1e-14)
    assert specfun.spherical_bessel_j(0, 0.0) == 1.0
    assert specfun.spherical_bessel_j(3, 0.0) == 0.0


def test_spherical_bessel_closed_form_l2():
    for x in (2.5, 0.2, 0.7):
        ref = (3 / x ** 3 - 1 / x) * math.sin(x) - 3 * math.cos(x) / x ** 2
        assert specfun.spherical_bessel_j(2, x) == pytest.approx(ref, rel=1e-9)


@given(st.integers(0, 6), st.floats(1e-3, 3.0))
def test_spherical_bessel_half_integer_relation(l, x):
    # both branches (power series below 0.5, library above) against sqrt(pi/2x) J_{l+1/2}
    ref = math.sqrt(math.pi / (2 * x)) * bessel_series(l + 0.5, x, 40)
    assert specfun.spherical_bessel_j(l, x) == pytest.approx(ref, rel=1e-12, abs=1e-300)


def test_harmonic_constant_and_explicit_forms():
    th, ph = 0.7, 1.9
    assert specfun.sph_harm(0, 0, th, ph) == pytest.approx(1 / math.sqrt(4 * math.pi))
    y11 = -math.sqrt(3 / (8 * math.pi)) * math.sin(th) * np.exp(1j * ph)
    y21 = -math.sqrt(15 / (8 * math.pi)) * math.sin(th) * math.cos(th) * np.exp(1j * ph)
    y20 = math.sqrt(5 / (16 * math.pi)) * (3 * math.cos(th) ** 2 - 1)
    assert specfun.sph_harm(1, 1, th, ph) == pytest.approx(y11, abs=1e-15)
    assert specfun.sph_harm(2, 1, th, ph) == pytest.approx(y21, abs=1e-15)
    assert specfun.sph_harm(2, 0, th, ph) == pytest.approx(y20, abs=1e-15)


def test_harmonic_normalization_by_quadrature():
    th, ph, w = sphere_grid()
    y = specfun.sph_harm(3, 2, th, ph)
    assert np.sum(np.abs(y) ** 2 * w) == pytest.approx(1.0, abs=1e-13)
    table = specfun.sph_harm_table(4, th, ph)
    gram = np.einsum("ixy,jxy,xy->ij", table, np.conj(table), w)
    assert np.allclose(gram, np.eye(25), atol=1e-12)


def test_addition_theorem():
    rng = np.random.default_rng(1)
    th, ph = rng.uniform(0, np.pi, 5), rng.uniform(0, 2 * np.pi, 5)
    for l in (2, 5):
        s = sum(np.abs(specfun.sph_harm(l, m, th, ph)) ** 2 for m in range(-l, l + 1))
        assert np.allclose(s, (2 * l + 1) / (4 * np.pi), rtol=1e-13)


@given(st.integers(0, 8).flatmap(lambda l: st.tuples(st.just(l), st.integers(-l, l))),
       st.floats(0, math.pi), st.floats(0, 2 * math.pi))
def test_negative_order_symmetry(lm, th, ph):
    l, m = lm
    a = specfun.sph_harm(l, -m, th, ph)
    b = (-1) ** m * np.conj(specfun.sph_harm(l, m, th, ph))
    assert abs(a - b) < 1e-12


def test_table_matches_single_evaluation():
    th, ph = np.array([0.1, 2.0]), np.array([3.0, -1.0])
    table = specfun.sph_harm_table(3, th, ph)
    for l, m in specfun.lm_pairs(3):
        assert np.allclose(table[specfun.lm_index(l, m)], specfun.sph_harm(l, m, th, ph), atol=1e-15)


def test_lm_index_layout():
    assert [specfun.lm_index(l, m) for l, m in specfun.lm_pairs(2)] == list(range(9))


def test_sph_harm_rejects_bad_index():
    with pytest.raises(ValueError):
        specfun.sph_harm(1, 2, 0.0, 0.0)


def test_gaunt_constant_term():
    assert specfun.gaunt(0, 0, 0, 0, 0, 0) == pytest.approx(1 / math.sqrt(4 * math.pi), rel=1e-14)


def test_gaunt_selection_rules():
    assert specfun.gaunt(1, 1, 1, 0, 2, 0) == 0.0      # m != m1 + m2
    assert specfun.gaunt(2, 0, 1, 0, 4, 0) == 0.0      # triangle
    assert specfun.gaunt(1, 0, 1, 0, 1, 0) == 0.0      # parity


@pytest.mark.parametrize("args", [(1, 1, 1, -1, 2, 0), (2, 1, 3, -2, 3, -1), (2, 2, 2, 0, 4, 2), (3, -1, 2, 1, 1, 0)])
def test_gaunt_against_symbolic(args):
    l1, m1, l2, m2, l, m = args
    # conj(y_lm) = (-1)^m y_{l,-m}
    ref = (-1) ** m * float(sympy_gaunt(l1, l2, l, m1, m2, -m).evalf(30))
    assert specfun.gaunt(*args) == pytest.approx(ref, abs=1e-14)


def test_gaunt_against_direct_quadrature():
    th, ph, w = sphere_grid(30)
    y = lambda l, m: specfun.sph_harm(l, m, th, ph)
    val = np.sum(y(3, 1) * y(2, -2) * np.conj(y(3, -1)) * w)
    assert specfun.gaunt(3, 1, 2, -2, 3, -1) == pytest.approx(val.real, abs=1e-13)
    assert abs(val.imag) < 1e-14


def test_gaunt_table_contraction_is_pointwise_product():
    table = specfun.gaunt_table(4)
    rng = np.random.default_rng(5)
    a = rng.normal(size=4) + 1j * rng.normal(size=4)    # degree <= 1
    b = rng.normal(size=9) + 1j * rng.normal(size=9)    # degree <= 2
    c = table.contract(a, b)
    th, ph = rng.uniform(0, np.pi, 7), rng.uniform(0, 2 * np.pi, 7)
    ya = specfun.sph_harm_table(1, th, ph)
    yb = specfun.sph_harm_table(2, th, ph)
    yc = specfun.sph_harm_table(4, th, ph)
    assert np.allclose(np.tensordot(c, yc, 1), np.tensordot(a, ya, 1) * np.tensordot(b, yb, 1), atol=1e-13)


def test_gaunt_table_rejects_out_of_range():
    with pytest.raises(ValueError):
        specfun.gaunt_table(2)(3, 0, 0, 0, 3, 0)


def test_wigner_zonal_north_pole():
    for l in range(4):
        vals = [specfun.wigner_zonal(l, m, [0, 0, 1]) for m in range(-l, l + 1)]
        for m, v in zip(range(-l, l + 1), vals):
            assert abs(v) < 1e-15 if m else v == pytest.approx(1.0)


def test_wigner_zonal_rotated_axis_value():
    d = np.array([0.3, -0.5, 0.81])
    d /= np.linalg.norm(d)
    th, ph = math.acos(d[2]), math.atan2(d[1], d[0])
    for l in (1, 2, 4):
        val = sum(specfun.wigner_zonal(l, m, d) * specfun.sph_harm(l, m, th, ph) for m in range(-l, l + 1))
        assert val == pytest.approx(specfun.sph_harm(l, 0, 0.0, 0.0), abs=1e-13)


def test_wigner_zonal_phi_periodicity():
    a = specfun.wigner_zonal(3, 2, [math.cos(0.4), math.sin(0.4), 0.2])
    b = specfun.wigner_zonal(3, 2, [math.cos(0.4 + 2 * math.pi), math.sin(0.4 + 2 * math.pi), 0.2])
    assert abs(abs(a) - abs(b)) < 1e-14


def test_sphere_quadrature_exactness():
    rule = specfun.SphereQuadrature.exact_to(8)
    f = np.cos(rule.theta) ** 4 * np.sin(rule.theta) ** 4 * np.cos(rule.phi) ** 4
    # int cos^4 sin^4 cos^4(phi) dOmega = (3 pi / 4) * int x^4 (1-x^2)^2 dx
    ref = 0.75 * math.pi * 2 * (1 / 5 - 2 / 7 + 1 / 9)
    assert rule.integrate(f) == pytest.approx(ref, rel=1e-13)


# Hankel profiles


def test_hankel_at_origin():
    prof = RadialProfile("steerable")
    assert specfun.hankel_profile(prof, 1, 0, 0.0) == 0.0
    ref, _ = integrate.quad(lambda p: float(prof.h_hat(p)) * p, math.pi / 4, math.pi, epsabs=1e-14)
    assert specfun.hankel_profile(prof, 0, 0, 0.0) == pytest.approx(ref, rel=1e-12)


@pytest.mark.parametrize("dim,order,q", [(2, 1, 0), (2, 3, 1), (3, 2, 0), (3, 1, 2)])
def test_hankel_against_adaptive_quadrature(dim, order, q):
    prof = RadialProfile("smooth")
    r = 1.0

    def integrand(p):
        base = float(prof.h_hat(p)) * p ** (dim - 1 - q)
        if dim == 2:
            return base * bessel_series(order, p * r, 60)
        return base * math.sqrt(math.pi / (2 * p * r)) * bessel_series(order + 0.5, p * r, 60)

    ref, _ = integrate.quad(integrand, math.pi / 4, math.pi, limit=400, epsabs=1e-14, epsrel=1e-13)
    assert specfun.hankel_profile(prof, order, q, r, dim) == pytest.approx(ref, rel=1e-10)


def test_hankel_scaling_band_weight_guard():
    prof = RadialProfile("smooth")
    with pytest.raises(ValueError, match="not integrable"):
        specfun.hankel_profile(prof, 0, 2, 1.0, 2, band="scaling")
    specfun.hankel_profile(prof, 0, 2, 1.0, 3, band="scaling")


def test_hankel_cache_interpolates_and_refuses_extrapolation():
    prof = RadialProfile("smooth")
    cache = specfun.HankelCache(prof, 2, 10.0)
    r = np.array([0.0, 0.37, 3.3, 9.99])
    assert np.allclose(cache(2, r), specfun.hankel_profile(prof, 2, 0, r), atol=1e-8)
    assert np.allclose(cache(-3, r), -cache(3, r))
    with pytest.raises(ValueError, match="exceeds"):
        cache(0, 12.0)
