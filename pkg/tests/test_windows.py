import json
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from psiec import specfun
from psiec.windows import (AngularWindow2D, AngularWindow3D, RadialProfile, admissibility_2d,
                           admissibility_3d, calderon_check, calderon_sum, cosine_power_2d,
                           directional_3d, icosahedral_axes, isotropic_2d, isotropic_3d,
                           load_window_config, shipped_config, window_set_from_dict)

PI = math.pi


class HalvedWavelet:
    """Steerable profile with the wavelet window scaled by one half."""

    def __init__(self):
        self.base = RadialProfile("steerable")

    def g_hat(self, rho):
        return self.base.g_hat(rho)

    def h_hat(self, rho):
        return 0.5 * self.base.h_hat(rho)


def test_steerable_anchor_values():
    prof = RadialProfile("steerable")
    assert prof.h_hat(PI / 2) == pytest.approx(1.0)
    assert prof.h_hat(PI / 4) == 0.0
    assert prof.h_hat(PI) == 0.0


@pytest.mark.parametrize("kind", ["steerable", "smooth"])
def test_partition_of_unity(kind):
    prof = RadialProfile(kind)
    assert calderon_check(prof, 0, np.linspace(0.1, PI, 5001)) < 1e-10
    assert calderon_check(prof, 6) < 1e-10


def test_box_profile_tiles_exactly():
    assert calderon_check(RadialProfile("box"), 6) < 1e-14


def test_scaled_window_residual():
    rho = np.linspace(0.1, 8 * PI, 4001)
    resid = np.abs(calderon_sum(HalvedWavelet(), rho) - 1.0)
    assert resid.max() == pytest.approx(0.75, abs=1e-6)
    assert abs(calderon_sum(HalvedWavelet(), np.array([PI]))[0] - 0.25) < 1e-12


def test_calderon_grid_outside_band_rejected():
    with pytest.raises(ValueError):
        calderon_check(RadialProfile(), 2, [5 * PI])


@given(st.floats(-3.0, 5.0))
def test_smooth_window_squares_sum_across_octave(u):
    prof = RadialProfile("smooth")
    rho = PI / 2 * 2.0 ** u
    total = prof.g_hat(rho) ** 2 + sum(prof.h_hat(rho * 2.0 ** -j) ** 2 for j in range(0, 8))
    assert total == pytest.approx(1.0, abs=1e-12)


def test_band_support_and_scaling_band():
    prof = RadialProfile("smooth")
    assert prof.band_support(3) == (2 * PI, 8 * PI)
    assert prof.band(-1, 0.0) == 1.0
    assert prof.band(2, 5 * PI) == 0.0


def test_unknown_radial_kind():
    with pytest.raises(ValueError):
        RadialProfile("gaussian")


def test_isotropic_planar_window_passes():
    assert admissibility_2d(isotropic_2d())


def test_cosine_power_window_with_enough_orientations():
    rep = admissibility_2d(cosine_power_2d(2, 5))
    assert rep and rep.max_offdiag < 1e-12


def test_cosine_power_window_with_too_few_orientations():
    rep = admissibility_2d(cosine_power_2d(2, 2))
    assert not rep
    assert "off-diagonal" in rep.failure


def test_steering_gram_direct():
    w = cosine_power_2d(3)
    u = w.steering_matrix()
    # direct oracle: sum_t |window_t(theta)|^2 is constant = trace
    theta = np.linspace(0, 2 * PI, 97)
    s = sum(np.abs(w.evaluate(t, theta)) ** 2 for t in range(1, w.orientations + 1))
    assert np.allclose(s, np.trace(u.conj().T @ u).real, atol=1e-13)


def test_rotated_window_matches_orientation():
    w = cosine_power_2d(2, 5)
    theta = np.linspace(0, 2 * PI, 33)
    assert np.allclose(w.rotated(w.angle(3)).evaluate(0, theta), w.evaluate(3, theta), atol=1e-14)


def test_planar_window_needs_odd_length():
    with pytest.raises(ValueError):
        AngularWindow2D(np.ones(4))


def test_isotropic_sphere_window():
    w = isotropic_3d()
    assert w.kappa[0, 0] == pytest.approx(math.sqrt(4 * PI))
    assert w.evaluate(1, np.array([0.3, 0.4, math.sqrt(0.75)])) == pytest.approx(1.0)
    assert admissibility_3d(w)


def test_directional_sphere_window_direct_sum():
    w = directional_3d(2)
    assert admissibility_3d(w)
    rng = np.random.default_rng(3)
    v = rng.normal(size=(50, 3))
    v /= np.linalg.norm(v, axis=1, keepdims=True)
    total = sum(np.abs(w.evaluate(t, v)) ** 2 for t in range(1, w.orientations + 1))
    assert np.allclose(total, 1.0, atol=1e-12)


def test_directional_window_is_zonal_power():
    c = icosahedral_axes()[2]
    w = directional_3d(2, normalize=False)
    v = np.array([[0.6, 0.0, 0.8], [0.0, -1.0, 0.0]])
    assert np.allclose(w.evaluate(3, v), (v @ c) ** 2, atol=1e-13)


def test_unnormalized_sphere_window_fails_at_origin_harmonic():
    rep = admissibility_3d(directional_3d(2, normalize=False))
    assert not rep and "(l=0, m=0)" in rep.failure


def test_polar_factor_window_is_rejected():
    rep = admissibility_3d(directional_3d(2, polar_factor=True))
    assert not rep and "polar factor" in rep.failure


def test_icosahedral_axes_unit_and_distinct():
    a = icosahedral_axes()
    assert np.allclose(np.linalg.norm(a, axis=1), 1.0)
    gram = np.abs(a @ a.T)
    assert np.allclose(gram[~np.eye(6, dtype=bool)], 1 / math.sqrt(5))


def test_kappa_shape_validated():
    with pytest.raises(ValueError):
        AngularWindow3D(np.ones((1, 5)))


@pytest.mark.parametrize("name,ok2,ok3", [("isotropic", True, True), ("directional", True, True),
                                          ("broken", False, False)])
def test_shipped_configs(name, ok2, ok3):
    w = load_window_config(shipped_config(name))
    r2, r3 = admissibility_2d(w.angular2d), admissibility_3d(w.angular3d)
    assert bool(r2) is ok2 and bool(r3) is ok3
    if not ok2:
        assert r2.failure.startswith("off-diagonal entry (n=-2, n'=2)")
        assert r3.failure.startswith("condition violated at (l=0, m=0)")


def test_config_roundtrip_through_dict():
    w = load_window_config(shipped_config("directional"))
    again = window_set_from_dict(json.loads(json.dumps(w.to_dict())))
    assert np.allclose(again.angular2d.beta, w.angular2d.beta)
    assert np.allclose(again.angular3d.kappa, w.angular3d.kappa)
    assert again.radial == w.radial


def test_config_rejects_unknown_keys():
    with pytest.raises(ValueError, match="unknown"):
        window_set_from_dict({"radial": {}, "extra": 1})
    with pytest.raises(ValueError):
        window_set_from_dict({"angular2d": {"kind": "wedge"}})
