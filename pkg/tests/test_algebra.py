import math

import numpy as np
import pytest

from src.models.events import EventImage
from src.models.lightfield import AperturePattern, LightField
from src.models.schemas import SensorConfig
from src.services.algebra_service import log_gap, permute_check, recover_intensities, virtual_event
from src.services.event_service import coded_sequence, simulate_sequence


def _events(rng, n_images: int, shape=(4, 5)):
    return [EventImage(values=rng.integers(-6, 7, size=shape), transition=(k, k + 1)) for k in range(1, n_images + 1)]


def _assert_recovery_bound(lf, patterns, cfg):
    images = simulate_sequence(lf, patterns, cfg, mode="ra")
    result = recover_intensities(images, 1, cfg)
    for rec, truth in zip(result.images, coded_sequence(lf, patterns)):
        residual = np.abs(np.log(rec.values + cfg.epsilon) - np.log(truth.values + cfg.epsilon))
        assert np.all(residual < cfg.tau)


class TestLogGap:
    def test_values(self, quiet_sensor):
        assert log_gap(0, quiet_sensor) == 0.0
        assert log_gap(2, quiet_sensor) == pytest.approx(0.60)

    def test_bounds_true_gap_for_simulated_pair(self, make_lightfield, make_patterns, quiet_sensor):
        lf = make_lightfield()
        patterns = make_patterns(2, black_first=False, binary=False)
        (eimg,) = simulate_sequence(lf, patterns, quiet_sensor, mode="baseline")
        prev, curr = coded_sequence(lf, patterns)
        true_gap = np.log(curr.values + 0.01) - np.log(prev.values + 0.01)
        assert np.all(np.abs(log_gap(eimg.values, quiet_sensor) - true_gap) < 0.30)


class TestVirtualEvent:
    def test_same_index_is_zero(self, rng):
        images = _events(rng, 3)
        assert not np.any(virtual_event(images, 2, 2).values)

    def test_forward_sum(self, rng):
        images = _events(rng, 3)
        np.testing.assert_array_equal(virtual_event(images, 1, 3).values, images[0].values + images[1].values)
        assert virtual_event(images, 1, 3).transition == (1, 3)

    def test_composition_and_antisymmetry(self, rng):
        # integer algebra, no tolerance
        for _ in range(1000):
            images = _events(rng, 4, shape=(3, 3))
            a, b, c = (int(i) for i in rng.integers(1, 6, size=3))
            ab = virtual_event(images, a, b).values
            bc = virtual_event(images, b, c).values
            ac = virtual_event(images, a, c).values
            np.testing.assert_array_equal(ab + bc, ac)
            np.testing.assert_array_equal(ab, -virtual_event(images, b, a).values)

    def test_index_out_of_range(self, rng):
        images = _events(rng, 3)
        with pytest.raises(ValueError):
            virtual_event(images, 0, 2)
        with pytest.raises(ValueError):
            virtual_event(images, 1, 5)


class TestRecoverIntensities:
    def test_zero_events_recover_black(self, quiet_sensor):
        images = [EventImage.zeros(3, 3, (k, k + 1)) for k in (1, 2, 3)]
        result = recover_intensities(images, 2, quiet_sensor)
        assert len(result.images) == 4
        for img in result.images:
            assert not np.any(img.values)

    def test_single_pixel_value(self, quiet_sensor):
        images = [EventImage(values=np.array([[4]]))]
        result = recover_intensities(images, 1, quiet_sensor)
        assert result.images[0].values[0, 0] == 0.0
        assert result.images[1].values[0, 0] == pytest.approx(0.01 * (math.exp(1.2) - 1), abs=1e-6)
        assert result.images[1].values[0, 0] == pytest.approx(0.023201, abs=1e-6)

    def test_black_entry_is_exactly_zero(self, rng, quiet_sensor):
        images = [EventImage(values=np.abs(rng.integers(0, 5, size=(3, 3))), transition=(k, k + 1)) for k in (1, 2)]
        result = recover_intensities(images, 3, quiet_sensor)
        assert not np.any(result.images[2].values)

    def test_monotone_in_cumulative_sum(self, quiet_sensor):
        images = [EventImage(values=np.arange(0, 12).reshape(3, 4))]
        values = recover_intensities(images, 1, quiet_sensor).images[1].values.ravel()
        assert np.all(np.diff(values) > 0)

    def test_negative_values_are_clamped_and_flagged(self, quiet_sensor):
        images = [EventImage(values=np.array([[-1, 2]]))]
        result = recover_intensities(images, 1, quiet_sensor)
        assert result.clamped_pixels == 1
        assert result.clamped_per_image == [0, 1]
        assert result.images[1].values[0, 0] == 0.0

    def test_black_index_out_of_range(self, quiet_sensor):
        with pytest.raises(ValueError):
            recover_intensities([EventImage.zeros(2, 2)], 3, quiet_sensor)

    def test_round_trip_within_threshold(self, make_lightfield, make_patterns, quiet_sensor):
        _assert_recovery_bound(make_lightfield(16, 16), make_patterns(4), quiet_sensor)

    @pytest.mark.slow
    def test_round_trip_over_many_instances(self, rng, make_patterns):
        cfg = SensorConfig(noiseless=True)
        for _ in range(100):
            lf = LightField(values=rng.uniform(size=(32, 32, 8, 8)))
            _assert_recovery_bound(lf, make_patterns(4), cfg)


class TestPermuteCheck:
    def test_identity_has_no_discrepancy(self, make_lightfield, make_patterns, quiet_sensor):
        report = permute_check(make_lightfield(), make_patterns(4), [1, 2, 3, 4], quiet_sensor)
        assert report.max_discrepancy == 0
        assert report.fraction_within_one == 1.0

    def test_constant_sequence(self, quiet_sensor):
        lf = LightField(values=np.full((6, 6, 8, 8), 0.4))
        ones = AperturePattern(values=np.ones((8, 8)))
        report = permute_check(lf, [ones] * 4, [3, 1, 4, 2], quiet_sensor)
        assert report.max_discrepancy == 0

    def test_invalid_permutation(self, make_lightfield, make_patterns, quiet_sensor):
        with pytest.raises(ValueError):
            permute_check(make_lightfield(), make_patterns(3), [1, 1, 2], quiet_sensor)

    def test_noise_is_ignored(self, make_lightfield, make_patterns):
        lf = make_lightfield()
        patterns = make_patterns(4)
        noisy = permute_check(lf, patterns, [1, 3, 2, 4], SensorConfig(seed=1))
        quiet = permute_check(lf, patterns, [1, 3, 2, 4], SensorConfig(seed=2))
        assert noisy == quiet

    @pytest.mark.slow
    def test_black_first_permutations_mostly_within_one_event(self, rng, make_patterns, quiet_sensor):
        fractions = []
        for _ in range(20):
            lf = LightField(values=rng.uniform(size=(32, 32, 8, 8)))
            perm = [1] + [int(p) + 2 for p in rng.permutation(3)]
            fractions.append(permute_check(lf, make_patterns(4), perm, quiet_sensor).fraction_within_one)
        assert np.mean(fractions) >= 0.95
