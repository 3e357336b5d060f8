import math

import numpy as np
import pytest

from oracles import gradient_fd, inverse_fft_form, laplacian_fd, periodized_form, polar_rule_2d, polar_rule_3d
from psiec import exterior_ft as eft
from psiec import form_wavelets as fw
from psiec.exterior_ft import SymbolicForm
from psiec.fields import Grid
from psiec.scalar_polarlets import ScalarAtomIndex

POLAR_ONLY = {(1, "delta", 1), (1, "delta", 2), (2, "d", 1), (2, "d", 2)}


def atom(dim, key, level=1, k=None, t=1):
    return fw.FormAtomIndex(ScalarAtomIndex(dim, level, k or (0,) * dim, t), *key)


def windows_for(dim, key, iso, polar):
    return polar if dim == 3 and key in POLAR_ONLY else iso


def inversions(seq):
    return sum(1 for i in range(len(seq)) for j in range(i + 1, len(seq)) if seq[i] > seq[j])


def spatial_d_fd(func, x, h=1e-3):
    """Exterior derivative of sampled components by central differences."""
    base = func(x)
    out = {}
    for J in base:
        for i in range(x.shape[-1]):
            if i in J:
                continue
            grad = gradient_fd(lambda y: func(y)[J], x, h)[..., i]
            seq = (i,) + J
            key = tuple(sorted(seq))
            out[key] = out.get(key, 0.0) + (-1) ** inversions(seq) * grad
    return out


# ---------------------------------------------------------------------------
# table

def test_index_constraints():
    s = ScalarAtomIndex(3, 0, (0, 0, 0))
    with pytest.raises(ValueError):
        fw.FormAtomIndex(s, 0, "d")
    with pytest.raises(ValueError):
        fw.FormAtomIndex(s, 3, "delta")
    with pytest.raises(ValueError):
        fw.FormAtomIndex(s, 1, "delta", 3)
    with pytest.raises(ValueError):
        fw.FormAtomIndex(ScalarAtomIndex(2, 0, (0, 0)), 1, "delta", 2)
    assert fw.families(3, 1, "delta") == (1, 2) and fw.families(3, 2, "d") == (1, 2)
    assert len(fw.atom_types(2)) == 4 and len(fw.atom_types(3)) == 8


def test_anchor_entries():
    d = fw.descriptor((1, "d", 1), 2)
    assert (d.coeff, d.weight_power, d.monomial) == (1j, 0, (0,))
    d = fw.descriptor((2, "delta", 1), 3)
    assert (d.coeff, d.weight_power, d.monomial) == (-1j, 1, (2,))
    assert fw.descriptor((1, "d", 1), 3).monomial == (0, 1)


@pytest.mark.parametrize("dim", [2, 3])
def test_table_structure(dim):
    table = fw.build_freq_table(dim)
    fw.validate_table(dim, table)
    for (r, nu, a), desc in table.items():
        assert len(desc.monomial) == dim - r
        assert (dim - 1 in desc.monomial) == (nu == "delta")
        assert desc.weight_power == (nu == "delta")
        assert abs(abs(desc.coeff) - 1) < 1e-15


def test_validation_rejects_a_flipped_sign():
    table = dict(fw.build_freq_table(2))
    d = table[(1, "delta", 1)]
    table[(1, "delta", 1)] = fw.FreqAtomDescriptor(2, 1, "delta", 1, -d.coeff, 1, d.monomial)
    with pytest.raises(fw.TableConstructionError):
        fw.validate_table(2, table)


def test_interior_product_lands_on_scalar_image_in_plane():
    form = SymbolicForm.monomial(2, "spherical", (1,), coeff=-1j, rpow=-1)
    out = eft.interior_xi(form)
    assert out == SymbolicForm.scalar(2, "spherical")


def test_volume_coefficient_fixed_by_exact_partner():
    c = fw.descriptor((0, "delta", 1), 3).coeff
    form = SymbolicForm.monomial(3, "spherical", (0, 1, 2), coeff=c, rpow=-1)
    image = eft.interior_xi(form)
    # the interior product only sees the radial leg: i * c * dtheta^dphi
    assert image == SymbolicForm.monomial(3, "spherical", (0, 1), coeff=1j * c)
    assert image == fw.descriptor((1, "d", 1), 3).symbolic().scale(eft.derivative_sign(3))


@pytest.mark.parametrize("dim", [2, 3])
def test_chain_map_on_descriptors(dim):
    for key in fw.atom_types(dim):
        image = eft.exterior_derivative_freq(fw.descriptor(key, dim).symbolic())
        if key[1] == "d":
            assert image.is_zero()
        else:
            target = fw.descriptor((key[0] + 1, "d", key[2]), dim)
            assert image == target.symbolic()


def test_listing_is_stable():
    text = fw.table_listing(2)
    assert text == fw.table_listing(2)
    assert "psi^(1,d) = i psi_hat d/dtheta" in text
    assert "psi^(2,delta) = -i/|xi| psi_hat d/dr" in fw.table_listing(3)


# ---------------------------------------------------------------------------
# frame components

def test_radial_direction_cosine_is_y10():
    harm = fw.frame_harmonics_3d((2,), False)
    c = harm[(2,)]
    assert abs(c[2] - math.sqrt(4 * math.pi / 3)) < 1e-12
    assert np.sum(np.abs(c)) - abs(c[2]) < 1e-12


def test_single_angular_vectors_need_polar_factor():
    with pytest.raises(ValueError, match="polar-factor"):
        fw.frame_harmonics_3d((0,), False)
    harm = fw.frame_harmonics_3d((0,), True)
    assert max(int(round(math.sqrt(np.flatnonzero(v).max() + 1))) - 1 for v in harm.values()) <= 2


def test_frame_is_orthonormal_and_oriented(rng):
    u = rng.standard_normal((50, 3))
    u /= np.linalg.norm(u, axis=1, keepdims=True)
    u[0] = (0, 0, 1)
    u[1] = (0, 0, -1)
    F = fw.frame_vectors(3, u)
    gram = np.einsum("a...k,b...k->...ab", F, F)
    assert np.allclose(gram, np.eye(3), atol=1e-13)
    assert np.allclose(np.linalg.det(np.moveaxis(F, 0, -2)), 1.0)


def test_plane_fourier_series_reproduce_components(rng):
    th = rng.uniform(0, 2 * math.pi, 20)
    u = np.stack([np.cos(th), np.sin(th)], -1)
    for mono in [(0,), (1,), (0, 1)]:
        comps = fw.frame_components(2, mono, u)
        for K, series in fw.frame_fourier_2d(mono).items():
            val = sum(c * np.exp(1j * m * th) for m, c in series.items())
            assert np.allclose(val, comps[K], atol=1e-14)


# ---------------------------------------------------------------------------
# spatial closed forms

@pytest.mark.parametrize("dim,key", [(2, k) for k in fw.atom_types(2)] + [(3, k) for k in fw.atom_types(3)])
def test_atoms_are_real(dim, key, iso, polar, rng):
    win = windows_for(dim, key, iso, polar)
    idx = atom(dim, key, level=1, t=2 if dim == 2 else 1)
    x = rng.uniform(-2, 2, (200, dim))
    assert fw.imaginary_residue(idx, win, x) < 1e-9


def test_isotropic_exact_one_form_is_a_radial_source(iso):
    idx = atom(2, (1, "d", 1), level=1)
    th = np.linspace(0, 2 * math.pi, 17)
    for r in (0.3, 1.1, 2.5):
        x = r * np.stack([np.cos(th), np.sin(th)], -1)
        c = fw.eval_space_form(idx, iso, x)
        field = np.stack([c[(0,)], c[(1,)]], -1)
        radial = np.sum(field * x / r, -1)
        tangential = field[:, 1] * np.cos(th) - field[:, 0] * np.sin(th)
        assert np.max(np.abs(tangential)) < 1e-12 * max(np.max(np.abs(radial)), 1e-300)
        assert np.allclose(radial, radial[0], rtol=1e-10)


PLANE_FFT = [(k, lev) for k in fw.atom_types(2) for lev in (1, 2)]


@pytest.mark.parametrize("key,level", PLANE_FFT)
def test_closed_form_matches_fft_plane(key, level, directional):
    grid = Grid(2, 128, 16.0)
    idx = atom(2, key, level=level, t=3)
    spec = fw.eval_freq_form(idx, directional, grid.freq_points())
    ref = inverse_fft_form(spec, grid, key[0])
    pts = grid.points()[::3, ::3]
    # slow tails: coarser levels need more periodic images
    images = 3 if level < 2 else 2
    got = periodized_form(lambda y: fw.eval_space_form(idx, directional, y), pts, grid.extent, images)
    peak = max(np.max(np.abs(v)) for v in ref.values())
    for J, v in ref.items():
        assert np.max(np.abs(v[::3, ::3].real - got[J])) < 1e-5 * peak
        assert np.max(np.abs(v.imag)) < 1e-9 * peak


@pytest.mark.parametrize("key", fw.atom_types(3))
def test_closed_form_matches_fft_space(key, iso, polar):
    win = windows_for(3, key, iso, polar)
    grid = Grid(3, 64, 16.0)
    idx = atom(3, key, level=2, k=(1, -2, 0), t=1)
    spec = fw.eval_freq_form(idx, win, grid.freq_points())
    ref = inverse_fft_form(spec, grid, key[0])
    sel = (slice(24, 40, 3),) * 3
    pts = grid.points()[sel]
    got = periodized_form(lambda y: fw.eval_space_form(idx, win, y), pts, grid.extent, 1)
    peak = max(np.max(np.abs(v)) for v in ref.values())
    for J, v in ref.items():
        assert np.max(np.abs(v[sel].real - got[J])) < 1e-5 * peak


def test_sample_atom_fft_is_the_same_field(iso):
    grid = Grid(2, 64, 8.0)
    idx = atom(2, (1, "delta", 1), level=1)
    a = fw.sample_atom_fft(idx, iso, grid)
    spec = fw.eval_freq_form(idx, iso, grid.freq_points())
    b = inverse_fft_form(spec, grid, 1)
    for J in b:
        assert np.allclose(a.components[J], b[J].real, atol=1e-14)


# ---------------------------------------------------------------------------
# operators on atoms

def test_exterior_derivative_atom_indices():
    s = ScalarAtomIndex(3, 2, (1, 0, -1), 3)
    out = fw.exterior_derivative_atom(fw.FormAtomIndex(s, 1, "delta", 2))
    assert out == fw.FormAtomIndex(s, 2, "d", 2)
    assert fw.exterior_derivative_atom(fw.FormAtomIndex(s, 2, "d", 2)) is None


@pytest.mark.parametrize("dim,r,a", [(2, 0, 1), (2, 1, 1), (3, 0, 1), (3, 1, 1), (3, 1, 2), (3, 2, 1)])
def test_exterior_derivative_in_space(dim, r, a, iso, polar, rng):
    key = (r, "delta", a)
    win = polar if dim == 3 and ((r, "delta", a) in POLAR_ONLY or (r + 1, "d", a) in POLAR_ONLY) else iso
    src = atom(dim, key, level=0)
    dst = fw.exterior_derivative_atom(src)
    x = rng.uniform(-1.5, 1.5, (12, dim))
    fd = spatial_d_fd(lambda y: fw.eval_space_form(src, win, y), x)
    exact = fw.eval_space_form(dst, win, x)
    peak = max(np.max(np.abs(v)) for v in exact.values())
    for J, v in exact.items():
        assert np.max(np.abs(fd.get(J, 0.0) - v)) < 1e-7 * peak


def _freq_norms(dim, key, win, level=1):
    breaks = [0.0, 0.5 * math.pi * 2 ** level, math.pi * 2 ** level, 2 * math.pi * 2 ** level]
    pts, wts = polar_rule_2d(breaks) if dim == 2 else polar_rule_3d(breaks)
    src = atom(dim, key, level)
    dst = fw.exterior_derivative_atom(src)
    rho2 = np.sum(pts ** 2, -1)
    h1 = sum(np.sum(wts * rho2 * np.abs(v) ** 2) for v in fw.eval_freq_form(src, win, pts).values())
    l2 = sum(np.sum(wts * np.abs(v) ** 2) for v in fw.eval_freq_form(dst, win, pts).values())
    return math.sqrt(h1), math.sqrt(l2)


@pytest.mark.parametrize("dim,key", [(d, k) for d in (2, 3) for k in fw.atom_types(d) if k[1] == "delta"])
def test_sobolev_norm_equality(dim, key, directional, polar):
    win = directional if dim == 2 else polar
    h1, l2 = _freq_norms(dim, key, win)
    assert h1 > 0 and abs(h1 - l2) < 1e-8 * l2


def test_codifferential_annihilates_coexact_descriptors():
    for dim in (2, 3):
        for key in fw.atom_types(dim):
            if key[1] == "delta":
                assert eft.codifferential_freq(fw.descriptor(key, dim).symbolic()).is_zero()


def test_hodge_pairs():
    s2 = ScalarAtomIndex(2, 1, (0, 0))
    w = fw.hodge_atom(fw.FormAtomIndex(s2, 1, "d"))
    assert (w.atom.key, w.weight_power, w.sign) == ((1, "delta", 1), 1, 1)
    w = fw.hodge_atom(fw.FormAtomIndex(s2, 1, "delta"))
    assert (w.atom.key, w.weight_power, w.sign) == ((1, "d", 1), -1, -1)
    s3 = ScalarAtomIndex(3, 1, (0, 0, 0))
    w = fw.hodge_atom(fw.FormAtomIndex(s3, 0, "delta"))
    assert (w.atom.key, w.weight_power, w.sign) == ((3, "d", 1), -1, -1)
    w = fw.hodge_atom(fw.FormAtomIndex(s3, 1, "delta", 1))
    assert w.atom.key == (2, "d", 2)


@pytest.mark.parametrize("dim", [2, 3])
def test_double_hodge_on_atoms(dim):
    s = ScalarAtomIndex(dim, 2, (0,) * dim)
    for key in fw.atom_types(dim):
        first = fw.hodge_atom(fw.FormAtomIndex(s, *key))
        second = fw.hodge_atom(first.atom)
        r = key[0]
        assert second.atom.key == key
        assert first.weight_power + second.weight_power == 0
        assert first.sign * second.sign == (-1) ** (r * (dim - r))


@pytest.mark.parametrize("dim,key", [(2, (1, "d", 1)), (2, (0, "delta", 1)), (3, (1, "d", 1)), (3, (2, "delta", 1)),
                                     (3, (1, "delta", 1))])
def test_hodge_atom_in_space(dim, key, iso, polar, rng):
    win = windows_for(dim, key, iso, polar)
    idx = atom(dim, key, level=1)
    w = fw.hodge_atom(idx)
    x = rng.uniform(-1, 1, (40, dim))
    comps = fw.eval_space_form(idx, win, x)
    star = {}
    for J, v in comps.items():
        Jc = tuple(i for i in range(dim) if i not in J)
        star[Jc] = (-1) ** inversions(J + Jc) * v
    dual = fw.eval_space_form(w.atom, win, x, extra_power=w.weight_power)
    peak = max(np.max(np.abs(v)) for v in star.values())
    for J, v in star.items():
        assert np.max(np.abs(float(np.real(w.sign)) * dual[J] - v)) < 1e-10 * peak


@pytest.mark.parametrize("dim", [2, 3])
def test_laplace_symbol_is_positive(dim):
    for key in fw.atom_types(dim):
        sym = fw.laplace_symbol(key, dim)
        assert sym == fw.descriptor(key, dim).symbolic().scale(1.0, rpow=2)
        w = fw.laplacian_atom(atom(dim, key))
        assert w.sign == 1 and w.weight_power == 2 and w.atom.key == key


@pytest.mark.parametrize("dim,key", [(2, (0, "delta", 1)), (2, (1, "d", 1)), (2, (1, "delta", 1)), (2, (2, "d", 1)),
                                     (3, (0, "delta", 1)), (3, (1, "d", 1)), (3, (2, "d", 1)), (3, (2, "delta", 1))])
def test_laplacian_matches_finite_differences(dim, key, directional, polar, rng):
    win = windows_for(dim, key, directional, polar)
    idx = atom(dim, key, level=0, t=2 if dim == 2 else 1)
    x = rng.uniform(-1.5, 1.5, (15, dim))
    fd = laplacian_fd(lambda y: fw.eval_space_form(idx, win, y), x)
    exact = fw.eval_space_laplacian(idx, win, x)
    peak = max(np.max(np.abs(v)) for v in exact.values())
    for J, v in exact.items():
        assert np.max(np.abs(fd[J] - v)) < 1e-4 * peak


# ---------------------------------------------------------------------------
# Galerkin matrix

def _fft_pairing(q, p, win, grid):
    xi = grid.freq_points()
    rho2 = np.sum(xi ** 2, -1)
    fq = fw.eval_freq_form(q, win, xi)
    fp = fw.eval_freq_form(p, win, xi)
    dxi = (2 * math.pi / grid.extent) ** grid.dim
    return float(np.real(sum(np.sum(rho2 * fq[K] * np.conj(fp[K])) for K in fq)) * dxi)


def test_nonadjacent_levels_are_exact_zeros(iso):
    for lv in [(-1, 1), (0, 2), (1, 3)]:
        q = atom(2, (1, "d", 1), level=lv[0])
        p = atom(2, (1, "d", 1), level=lv[1])
        assert fw.galerkin_entry(iso, q, p) == 0.0
    rows = [atom(2, (1, "delta", 1), level=j, k=(1, 0)) for j in (-1, 0, 1, 2)]
    D = fw.galerkin_laplacian(rows, rows, iso)
    assert D[0, 2] == 0.0 and D[0, 3] == 0.0 and D[1, 3] == 0.0
    assert D[0, 1] != 0.0


def test_galerkin_symmetry(directional):
    rows = [atom(2, (1, "d", 1), level=j, k=(k, 1 - k), t=t) for j in (0, 1) for k in (0, 1) for t in (1, 3)]
    D = fw.galerkin_laplacian(rows, rows, directional)
    assert np.max(np.abs(D - D.T)) < 1e-12 * np.max(np.abs(D))


@pytest.mark.parametrize("key", [(1, "d", 1), (0, "delta", 1)])
def test_galerkin_matches_dense_quadrature(key, directional):
    grid = Grid(2, 256, 128.0)
    cases = [(0, (0, 0), 1, 0, (0, 0), 1), (1, (0, 0), 2, 1, (3, 1), 4), (0, (1, 0), 1, 1, (0, 0), 2), (1, (0, 0), 1, 1, (2, 0), 1)]
    for jq, kq, tq, jp, kp, tp in cases:
        q = atom(2, key, level=jq, k=kq, t=tq)
        p = atom(2, key, level=jp, k=kp, t=tp)
        val = fw.galerkin_entry(directional, q, p)
        ref = _fft_pairing(q, p, directional, grid)
        assert abs(val - ref) < 1e-6 * max(abs(ref), 1.0)


def test_galerkin_space(iso):
    grid = Grid(3, 64, 32.0)
    q = atom(3, (0, "delta", 1), level=0)
    p = atom(3, (0, "delta", 1), level=0, k=(1, 0, 1))
    val = fw.galerkin_entry(iso, q, p)
    assert abs(val - _fft_pairing(q, p, iso, grid)) < 1e-6
    assert abs(val - fw.galerkin_entry(iso, p, q)) < 1e-12


def test_galerkin_rejects_mixed_types(iso):
    with pytest.raises(ValueError):
        fw.galerkin_entry(iso, atom(2, (1, "d", 1)), atom(2, (1, "delta", 1)))
    q3 = atom(3, (1, "delta", 1))
    assert fw.galerkin_entry(iso, q3, atom(3, (1, "delta", 2))) == 0.0
