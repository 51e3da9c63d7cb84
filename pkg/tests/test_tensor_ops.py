import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from camradar import tensor_ops as T
from conftest import (bilinear_oracle, conv2d_oracle, conv3d_oracle,
                      conv_transpose3d_oracle, trilinear_oracle)


class TestBilinearSample:
    def test_lattice_point_returns_stored_value(self, rng):
        fmap = rng.normal(size=(3, 5, 7))
        out = T.bilinear_sample(fmap, [(2.0, 3.0)])
        np.testing.assert_allclose(out[:, 0], fmap[:, 3, 2], atol=0)

    def test_midpoint_of_two_cells(self):
        fmap = np.zeros((1, 1, 2))
        fmap[0, 0, 1] = 1.0
        out = T.bilinear_sample(fmap, [(0.5, 0.0)])
        assert out[0, 0] == pytest.approx(0.5)

    def test_far_outside_is_zero(self, rng):
        fmap = rng.normal(size=(4, 6, 6))
        out = T.bilinear_sample(fmap, [(-5.0, -5.0)])
        np.testing.assert_array_equal(out[:, 0], np.zeros(4))

    def test_matches_oracle_at_random_points(self, rng):
        fmap = rng.normal(size=(2, 6, 9))
        pts = rng.uniform(-2, 10, size=(40, 2))
        out = T.bilinear_sample(fmap, pts)
        for n, (x, y) in enumerate(pts):
            np.testing.assert_allclose(out[:, n], bilinear_oracle(fmap, x, y), atol=1e-12)

    def test_linear_in_stored_values(self, rng):
        fmap = rng.normal(size=(2, 5, 5))
        pts = rng.uniform(0, 4, size=(10, 2))
        np.testing.assert_allclose(T.bilinear_sample(3.5 * fmap, pts),
                                   3.5 * T.bilinear_sample(fmap, pts), atol=1e-12)

    def test_rejects_bad_shapes(self):
        with pytest.raises(ValueError):
            T.bilinear_sample(np.zeros((2, 2)), [(0, 0)])
        with pytest.raises(ValueError):
            T.bilinear_sample(np.zeros((1, 2, 2)), [(0, 0, 0)])


class TestTrilinearSample:
    def test_lattice_point(self, rng):
        vol = rng.normal(size=(2, 4, 5, 3))
        out = T.trilinear_sample(vol, [(3.0, 2.0, 1.0)])
        np.testing.assert_allclose(out[:, 0], vol[:, 2, 3, 1], atol=0)

    def test_constant_cube_center(self):
        vol = np.full((1, 2, 2, 2), 7.25)
        out = T.trilinear_sample(vol, [(0.5, 0.5, 0.5)])
        assert out[0, 0] == pytest.approx(7.25)

    def test_reproduces_trilinear_field(self):
        # values x + 2y + 3z at lattice points; interpolation is exact for
        # fields linear per axis
        h, w, d = 4, 5, 3
        vol = np.zeros((1, h, w, d))
        for y in range(h):
            for x in range(w):
                for z in range(d):
                    vol[0, y, x, z] = x + 2 * y + 3 * z
        pts = np.array([[1.25, 2.5, 0.75], [3.0, 0.25, 1.5], [0.4, 1.9, 0.1]])
        out = T.trilinear_sample(vol, pts)
        expected = pts[:, 0] + 2 * pts[:, 1] + 3 * pts[:, 2]
        np.testing.assert_allclose(out[0], expected, atol=1e-12)

    def test_matches_oracle(self, rng):
        vol = rng.normal(size=(3, 4, 4, 4))
        pts = rng.uniform(-1.5, 5, size=(30, 3))
        out = T.trilinear_sample(vol, pts)
        for n, (x, y, z) in enumerate(pts):
            np.testing.assert_allclose(out[:, n], trilinear_oracle(vol, x, y, z), atol=1e-12)


class TestResizeBilinear:
    def test_constant_map_stays_constant(self):
        fmap = np.full((2, 3, 4), 1.5)
        out = T.resize_bilinear(fmap, 7, 9)
        np.testing.assert_allclose(out, 1.5, atol=1e-12)

    def test_ramp_midpoint(self):
        fmap = np.array([[[0.0, 1.0], [0.0, 1.0]]])
        out = T.resize_bilinear(fmap, 2, 3)
        np.testing.assert_allclose(out[0, :, 1], [0.5, 0.5], atol=1e-12)

    def test_align_corners_preserved_on_downscale(self):
        ramp = np.arange(16, dtype=float).reshape(1, 4, 4)
        out = T.resize_bilinear(ramp, 2, 2)
        np.testing.assert_allclose(
            out[0], [[ramp[0, 0, 0], ramp[0, 0, 3]], [ramp[0, 3, 0], ramp[0, 3, 3]]],
            atol=1e-12)

    def test_single_cell_output_is_center(self):
        fmap = np.array([[[0.0, 1.0], [0.0, 1.0]]])
        out = T.resize_bilinear(fmap, 1, 1)
        assert out[0, 0, 0] == pytest.approx(0.5)


class TestSoftmax:
    def test_uniform(self):
        np.testing.assert_allclose(T.softmax(np.array([0.0, 0.0])), [0.5, 0.5], atol=1e-15)

    def test_no_overflow_on_large_inputs(self):
        out = T.softmax(np.array([1000.0, 1000.0]))
        np.testing.assert_allclose(out, [0.5, 0.5], atol=1e-15)

    def test_closed_form_quarter(self):
        out = T.softmax(np.array([0.0, math.log(3.0)]))
        np.testing.assert_allclose(out, [0.25, 0.75], atol=1e-12)

    @settings(max_examples=60, deadline=None)
    @given(st.lists(st.floats(-1e6, 1e6), min_size=1, max_size=12))
    def test_sums_to_one_for_any_finite_input(self, values):
        out = T.softmax(np.array(values))
        assert abs(out.sum() - 1.0) <= 1e-9
        # exp underflows to exactly 0 for huge gaps, so the bound is closed
        assert np.all(out >= 0) and np.all(out <= 1.0 + 1e-12)


class TestConv:
    def test_identity_1x1_kernel(self, rng):
        x = rng.normal(size=(3, 5, 5))
        k = np.zeros((3, 3, 1, 1))
        for c in range(3):
            k[c, c, 0, 0] = 1.0
        np.testing.assert_allclose(T.conv2d(x, k), x, atol=0)

    def test_ones_kernel_on_one_hot(self):
        x = np.zeros((1, 5, 5))
        x[0, 2, 2] = 1.0
        k = np.ones((1, 1, 3, 3))
        out = T.conv2d(x, k, padding=1)
        assert out.shape == (1, 5, 5)
        np.testing.assert_array_equal(out[0, 1:4, 1:4], np.ones((3, 3)))
        assert out.sum() == pytest.approx(9.0)

    def test_conv2d_matches_bruteforce(self, rng):
        x = rng.normal(size=(2, 5, 5))
        k = rng.normal(size=(3, 2, 3, 3))
        for stride, padding in ((1, 0), (1, 1), (2, 1)):
            np.testing.assert_allclose(T.conv2d(x, k, stride, padding),
                                       conv2d_oracle(x, k, stride, padding), atol=1e-12)

    def test_conv3d_matches_bruteforce(self, rng):
        x = rng.normal(size=(2, 4, 4, 3))
        k = rng.normal(size=(2, 2, 3, 3, 3))
        for stride, padding in ((1, 1), (2, 1)):
            np.testing.assert_allclose(T.conv3d(x, k, stride, padding),
                                       conv3d_oracle(x, k, stride, padding), atol=1e-12)

    def test_constant_map_interior_equals_kernel_sum(self, rng):
        x = np.full((1, 6, 6), 2.0)
        k = rng.normal(size=(1, 1, 3, 3))
        out = T.conv2d(x, k, padding=1)
        np.testing.assert_allclose(out[0, 1:-1, 1:-1], 2.0 * k.sum(), atol=1e-12)

    def test_channel_mismatch_raises(self):
        with pytest.raises(ValueError):
            T.conv2d(np.zeros((2, 4, 4)), np.zeros((1, 3, 3, 3)))

    def test_even_kernel_rejected(self):
        with pytest.raises(ValueError):
            T.conv2d(np.zeros((1, 4, 4)), np.zeros((1, 1, 2, 2)))

    def test_output_extent_formula(self, rng):
        x = rng.normal(size=(1, 9, 7))
        k = rng.normal(size=(1, 1, 3, 3))
        out = T.conv2d(x, k, stride=2, padding=1)
        assert out.shape == (1, (9 + 2 - 3) // 2 + 1, (7 + 2 - 3) // 2 + 1)

    def test_transpose3d_matches_scatter_oracle(self, rng):
        x = rng.normal(size=(2, 3, 2, 2))
        k = rng.normal(size=(2, 3, 2, 2, 2))
        np.testing.assert_allclose(T.conv_transpose3d(x, k, stride=2),
                                   conv_transpose3d_oracle(x, k, stride=2), atol=1e-12)

    def test_determinism(self, rng):
        x = rng.normal(size=(2, 5, 5))
        k = rng.normal(size=(2, 2, 3, 3))
        a = T.conv2d(x, k, padding=1)
        b = T.conv2d(x.copy(), k.copy(), padding=1)
        assert np.array_equal(a, b)


class TestDumps:
    def test_text_round_trip(self, rng):
        x = rng.normal(size=(2, 3, 4))
        back = T.load_text(T.dump_text(x))
        assert back.shape == x.shape
        np.testing.assert_array_equal(back, x)

    def test_text_header_required(self):
        with pytest.raises(ValueError):
            T.load_text("1 2 3")

    def test_binary_round_trip_bit_exact(self, rng):
        x = rng.normal(size=(3, 4, 2)).astype(np.float32).astype(np.float64)
        blob = T.dump_binary(x)
        assert blob[:4] == b"DTNS"
        back = T.load_binary(blob)
        assert np.array_equal(back, x)
        assert T.dump_binary(back) == blob

    def test_binary_f32_payload(self, rng):
        x = rng.normal(size=(5,))
        back = T.load_binary(T.dump_binary(x))
        np.testing.assert_array_equal(back, x.astype(np.float32).astype(np.float64))

    def test_binary_bad_magic(self):
        with pytest.raises(ValueError):
            T.load_binary(b"XXXX" + b"\x00" * 16)
