import numpy as np
import pytest
from pydantic import ValidationError

from src.models.lightfield import AperturePattern, CodedImage, LightField
from src.services.lightfield_service import (
    assemble_patches,
    code_image,
    disparity_histogram,
    epipolar_slice,
    estimate_shift,
    extract_patches,
    normalize,
    synth_lightfield,
)


class TestModels:
    def test_lightfield_rejects_out_of_range(self):
        with pytest.raises(ValidationError):
            LightField(values=np.full((4, 4, 8, 8), 1.5))

    def test_lightfield_rejects_wrong_view_grid(self):
        with pytest.raises(ValidationError):
            LightField(values=np.zeros((4, 4, 8, 7)))

    def test_lightfield_values_are_read_only(self, make_lightfield):
        lf = make_lightfield()
        with pytest.raises(ValueError):
            lf.values[0, 0, 0, 0] = 0.5

    def test_view_indexing_is_u_then_v(self):
        values = np.zeros((2, 2, 8, 8))
        values[:, :, 5, 2] = 1.0
        lf = LightField(values=values)
        assert lf.view(2, 5).sum() == 4.0
        assert lf.view(5, 2).sum() == 0.0

    def test_binary_flag_is_checked(self):
        with pytest.raises(ValidationError):
            AperturePattern(values=np.full((8, 8), 0.5), binary=True)

    def test_black_pattern(self):
        black = AperturePattern.black()
        assert black.is_black
        assert black.binary
        assert black.transmittance == 0.0

    def test_normalized_coded_image_bounded(self):
        with pytest.raises(ValidationError):
            CodedImage(values=np.full((2, 2), 1.2), normalized=True)


class TestCodeImage:
    def test_open_aperture_sums_views(self):
        lf = LightField(values=np.full((3, 5, 8, 8), 0.5))
        coded = code_image(lf, AperturePattern(values=np.ones((8, 8))))
        np.testing.assert_allclose(coded.values, 32.0)
        assert not coded.normalized
        np.testing.assert_allclose(normalize(coded).values, 0.5)

    def test_single_view_pattern_selects_view(self, make_lightfield):
        lf = make_lightfield(6, 7)
        grid = np.zeros((8, 8))
        grid[3, 6] = 1.0
        coded = code_image(lf, AperturePattern(values=grid))
        np.testing.assert_array_equal(coded.values, lf.view(6, 3))

    def test_black_pattern_gives_zero(self, make_lightfield):
        coded = code_image(make_lightfield(), AperturePattern.black())
        assert not np.any(coded.values)

    def test_linear_in_pattern(self, make_lightfield, rng):
        lf = make_lightfield()
        a = rng.uniform(size=(8, 8)) * 0.5
        b = rng.uniform(size=(8, 8)) * 0.5
        lhs = code_image(lf, AperturePattern(values=a + b)).values
        rhs = code_image(lf, AperturePattern(values=a)).values + code_image(lf, AperturePattern(values=b)).values
        np.testing.assert_allclose(lhs, rhs, rtol=1e-12)

    def test_linear_in_lightfield(self, make_lightfield, make_patterns):
        first, second = make_lightfield(), make_lightfield()
        mixed = LightField(values=0.4 * first.values + 0.6 * second.values)
        for pattern in make_patterns(3, black_first=False, binary=False):
            lhs = code_image(mixed, pattern).values
            rhs = 0.4 * code_image(first, pattern).values + 0.6 * code_image(second, pattern).values
            np.testing.assert_allclose(lhs, rhs, rtol=1e-12, atol=1e-14)

    def test_monotone_in_pattern(self, make_lightfield, rng):
        lf = make_lightfield()
        low = rng.uniform(size=(8, 8)) * 0.5
        high = np.minimum(low + rng.uniform(size=(8, 8)) * 0.5, 1.0)
        darker = code_image(lf, AperturePattern(values=low)).values
        brighter = code_image(lf, AperturePattern(values=high)).values
        assert np.all(brighter >= darker)

    def test_normalize_twice_raises(self, make_lightfield):
        coded = normalize(code_image(make_lightfield(), AperturePattern(values=np.ones((8, 8)))))
        with pytest.raises(ValueError):
            normalize(coded)


class TestPatches:
    def test_patch_count_and_order(self, make_lightfield):
        lf = make_lightfield(96, 96)
        patches = extract_patches(lf, 64, 32)
        assert len(patches) == 4
        np.testing.assert_array_equal(patches[1].values, lf.values[0:64, 32:96])
        np.testing.assert_array_equal(patches[2].values, lf.values[32:96, 0:64])

    @pytest.mark.parametrize("pixel, covered", [((40, 40), 4), ((70, 70), 1), ((10, 80), 1), ((50, 10), 2)])
    def test_pixel_coverage(self, pixel, covered):
        values = np.zeros((96, 96, 8, 8))
        values[pixel[0], pixel[1]] = 1.0
        patches = extract_patches(LightField(values=values), 64, 32)
        assert sum(bool(p.values.any()) for p in patches) == covered

    def test_invalid_arguments(self, make_lightfield):
        lf = make_lightfield(16, 16)
        with pytest.raises(ValueError):
            extract_patches(lf, 32, 8)
        with pytest.raises(ValueError):
            extract_patches(lf, 8, 0)

    def test_assemble_inverts_tiling(self, make_lightfield):
        lf = make_lightfield(24, 16)
        patches = extract_patches(lf, 8, 8)
        rebuilt = assemble_patches(patches, 16, 24)
        np.testing.assert_array_equal(rebuilt.values, lf.values)

    def test_assemble_rejects_partial_tiling(self, make_lightfield):
        patches = extract_patches(make_lightfield(16, 16), 8, 8)
        with pytest.raises(ValueError):
            assemble_patches(patches[:3], 16, 16)


class TestSynthetic:
    def test_deterministic(self):
        a = synth_lightfield(5, 24, 20, 3)
        b = synth_lightfield(5, 24, 20, 3)
        np.testing.assert_array_equal(a.values, b.values)
        assert a.values.shape == (20, 24, 8, 8)

    def test_seed_changes_scene(self):
        a = synth_lightfield(1, 16, 16, 2)
        b = synth_lightfield(2, 16, 16, 2)
        assert not np.array_equal(a.values, b.values)

    def test_zero_disparity_layer_has_identical_views(self):
        lf = synth_lightfield(3, 16, 16, 1, disparities=[0])
        for v in range(8):
            for u in range(8):
                np.testing.assert_array_equal(lf.view(u, v), lf.view(4, 4))

    def test_views_translate_by_disparity(self):
        lf = synth_lightfield(4, 32, 32, 1, disparities=[2])
        np.testing.assert_array_equal(lf.view(5, 4)[:, 10:20], lf.view(4, 4)[:, 8:18])
        np.testing.assert_array_equal(lf.view(4, 5)[10:20, :], lf.view(4, 4)[8:18, :])

    def test_rejects_repeated_disparities(self):
        with pytest.raises(ValueError):
            synth_lightfield(0, 16, 16, 2, disparities=[1, 1])

    def test_estimate_shift_recovers_disparity(self):
        lf = synth_lightfield(9, 32, 24, 1, disparities=[2])
        shifts = estimate_shift(lf.view(4, 4), lf.view(5, 4))
        assert np.all(shifts == 2)

    def test_histogram_of_single_layer(self):
        lf = synth_lightfield(11, 32, 16, 1, disparities=[-1])
        assert disparity_histogram(lf) == {-1: 7 * 16}


class TestEpipolarSlice:
    def test_shapes(self, make_lightfield):
        lf = make_lightfield(10, 14)
        assert epipolar_slice(lf, "horizontal", 3).shape == (8, 14)
        assert epipolar_slice(lf, "vertical", 3).shape == (8, 10)

    def test_slope_follows_disparity(self):
        lf = synth_lightfield(6, 32, 16, 1, disparities=[1])
        epi = epipolar_slice(lf, "horizontal", 8)
        np.testing.assert_array_equal(epi[5, 11:21], epi[4, 10:20])

    def test_rejects_bad_axis_and_index(self, make_lightfield):
        lf = make_lightfield(8, 8)
        with pytest.raises(ValueError):
            epipolar_slice(lf, "diagonal", 0)
        with pytest.raises(ValueError):
            epipolar_slice(lf, "horizontal", 8)
