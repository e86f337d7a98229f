import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from _builders import make_manifest
from objectddm.visual_field import (
    CenterBiasParams,
    apply_object_sensitivity,
    center_bias_map,
    gaussian_sensitivity,
    information_map,
    normalize_features,
)


class TestCenterBias:
    def test_disabled_is_ones(self):
        bias = center_bias_map(make_manifest(7, 5), CenterBiasParams(enabled=False))
        assert bias.shape == (5, 7)
        assert (bias == 1).all()

    def test_peak_at_center(self):
        bias = center_bias_map(make_manifest(9, 7), CenterBiasParams())
        assert bias[3, 4] == 1.0
        assert bias.max() == 1.0

    def test_one_sigma_off_center(self):
        # width 81: sigma_x = 0.1 * 80... choose frac so sigma is an integer pixel count
        m = make_manifest(81, 41)
        bias = center_bias_map(m, CenterBiasParams(sigma_x_frac=10 / 81, sigma_y_frac=0.25))
        assert math.isclose(bias[20, 40 + 10], math.exp(-0.5), rel_tol=1e-12)

    def test_symmetric_through_center(self):
        bias = center_bias_map(make_manifest(20, 11), CenterBiasParams(sigma_x_frac=0.3, sigma_y_frac=0.2))
        assert np.allclose(bias, bias[::-1, ::-1], rtol=0, atol=1e-15)

    @pytest.mark.parametrize("frac", [0.0, -1.0, 10.5])
    def test_invalid_fractions(self, frac):
        with pytest.raises(ValueError):
            CenterBiasParams(sigma_x_frac=frac)


class TestGaussianSensitivity:
    def test_peak_value(self):
        m = make_manifest(41, 31, px_per_dva=2.0)
        g = gaussian_sensitivity(20, 15, 3.0, m)
        sigma = 6.0
        assert math.isclose(g[15, 20], 1 / (2 * math.pi * sigma**2), rel_tol=1e-12)
        assert math.isclose(g[15, 26], g[15, 20] * math.exp(-0.5), rel_tol=1e-12)
        assert math.isclose(g[9, 20], g[15, 20] * math.exp(-0.5), rel_tol=1e-12)

    def test_matches_formula_everywhere(self):
        m = make_manifest(13, 9, px_per_dva=1.5)
        x0, y0, sd = 4.3, 6.1, 2.2
        g = gaussian_sensitivity(x0, y0, sd, m)
        s = sd * 1.5
        for y in range(9):
            for x in range(13):
                ref = 1 / (2 * math.pi * s**2) * math.exp(-((x - x0) ** 2 + (y - y0) ** 2) / (2 * s**2))
                assert math.isclose(g[y, x], ref, rel_tol=1e-12)

    def test_operating_point_sigma_in_pixels(self):
        m = make_manifest(600, 5, px_per_dva=35.0)
        g = gaussian_sensitivity(0, 2, 6.5, m)
        assert math.isclose(g[2, 0], 1 / (2 * math.pi * 227.5**2), rel_tol=1e-12)

    def test_non_positive_sigma(self):
        with pytest.raises(ValueError):
            gaussian_sensitivity(0, 0, 0.0, make_manifest())


class TestObjectSensitivity:
    def setup_method(self):
        self.g = gaussian_sensitivity(3, 3, 0.3, make_manifest(8, 8))
        self.mask = np.zeros((8, 8), dtype=np.uint16)
        self.mask[2:5, 1:4] = 3

    def test_background_foveation_unchanged(self):
        field = apply_object_sensitivity(self.g, self.mask, 0, 7e-8)
        assert np.array_equal(field.values, self.g)

    def test_object_gets_omega(self):
        field = apply_object_sensitivity(self.g, self.mask, 3, 7e-8)
        assert (field.values[self.mask == 3] == 7e-8).all()
        assert np.array_equal(field.values[self.mask != 3], self.g[self.mask != 3])
        assert field.foveated_id == 3

    def test_full_cover(self):
        field = apply_object_sensitivity(self.g, np.full((8, 8), 1), 1, 2e-3)
        assert (field.values == 2e-3).all()

    def test_input_not_modified(self):
        before = self.g.copy()
        apply_object_sensitivity(self.g, self.mask, 3, 1.0)
        assert np.array_equal(before, self.g)

    @given(
        # sub-pixel sigmas alias: the sampled grid sum then exceeds 1
        st.floats(0, 19), st.floats(0, 14), st.floats(1.0, 3), st.floats(0, 1e-2),
        st.integers(0, 2),
    )
    @settings(max_examples=50, deadline=None)
    def test_mass_bound(self, x0, y0, sd, omega, fov):
        m = make_manifest(20, 15, px_per_dva=2.0)
        mask = np.zeros((15, 20), dtype=np.int64)
        mask[3:9, 4:12] = 1
        mask[10:14, 14:19] = 2
        field = apply_object_sensitivity(gaussian_sensitivity(x0, y0, sd, m), mask, fov, omega)
        area = int((mask == fov).sum()) if fov else 0
        assert field.values.sum() <= 1 + omega * area + 1e-12


class TestInformationMap:
    def test_identity(self):
        S = np.random.default_rng(0).random((4, 4))
        assert np.array_equal(information_map(np.ones((4, 4)), np.ones((4, 4)), S), S)

    def test_zero_sensitivity(self):
        F = np.random.default_rng(1).random((4, 4))
        assert (information_map(F, np.ones((4, 4)), np.zeros((4, 4))) == 0).all()

    def test_matches_elementwise_loop(self):
        rng = np.random.default_rng(2)
        F, B, S = rng.random((4, 4)), rng.random((4, 4)), rng.random((4, 4))
        info = information_map(F, B, S)
        for y in range(4):
            for x in range(4):
                assert info[y, x] == F[y, x] * B[y, x] * S[y, x]

    def test_shape_mismatch(self):
        with pytest.raises(ValueError, match="shape mismatch"):
            information_map(np.ones((4, 4)), np.ones((4, 4)), np.ones((3, 4)))

    @given(
        arrays(np.float64, (3, 3), elements=st.floats(0, 10)),
        arrays(np.float64, (3, 3), elements=st.floats(0, 10)),
        arrays(np.float64, (3, 3), elements=st.floats(0, 10)),
        st.floats(0, 5), st.floats(0, 5),
    )
    def test_bilinear(self, F1, F2, S, a, b):
        B = np.ones((3, 3))
        lhs = information_map(a * F1 + b * F2, B, S)
        rhs = a * information_map(F1, B, S) + b * information_map(F2, B, S)
        assert np.allclose(lhs, rhs, rtol=1e-9, atol=1e-9)
        assert (lhs >= 0).all()


def test_normalize_features():
    f = np.array([[0.0, 2.0], [1.0, 4.0]])
    assert np.array_equal(normalize_features(f), f / 4)
    assert normalize_features(f, 10.0).max() == 10.0
    assert (normalize_features(np.zeros((2, 2))) == 0).all()
