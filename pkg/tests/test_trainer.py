import math

import numpy as np
import pytest

from src.models.lightfield import LightField
from src.models.schemas import SensorConfig, TrainConfig
from src.models.state import PatternLogits
from src.nn.recnet import ReconNet
from src.services.lightfield_service import synth_lightfield
from src.services.training_service import (
    binarize_patterns,
    constant_predictor_mse,
    evaluate,
    init_logits,
    patterns_from_logits,
    reconstruct,
    split_dataset,
    train,
)


def _tiny_config(**overrides) -> TrainConfig:
    values = dict(
        n_patterns=3, epochs=2, batch_size=2, depth=2, width=4, lr=1e-2,
        sensor=SensorConfig(noiseless=True), val_fraction=0.34, seed=5,
    )
    values.update(overrides)
    return TrainConfig(**values)


@pytest.fixture
def tiny_dataset(make_lightfield):
    return [make_lightfield(6, 6) for _ in range(3)]


class TestPatternsFromLogits:
    def test_zero_logits_give_half(self):
        logits = PatternLogits(values=np.zeros((2, 8, 8)), frozen_black=[False, False])
        for p in patterns_from_logits(logits, 3.0):
            np.testing.assert_array_equal(p.values, 0.5)

    def test_sigmoid_of_scaled_logits(self):
        logits = PatternLogits(values=np.full((1, 8, 8), 2.0), frozen_black=[False])
        (p,) = patterns_from_logits(logits, 1.0)
        np.testing.assert_allclose(p.values, 1.0 / (1.0 + math.exp(-2.0)))

    def test_frozen_pattern_is_black(self, rng):
        logits = PatternLogits(values=rng.normal(size=(3, 8, 8)), frozen_black=[True, False, False])
        patterns = patterns_from_logits(logits, 1.0)
        assert patterns[0].is_black
        assert not patterns[1].is_black

    def test_large_sharpness_is_nearly_binary(self, rng):
        values = rng.normal(size=(2, 8, 8))
        values[np.abs(values) < 1e-3] = 1e-3
        logits = PatternLogits(values=values, frozen_black=[False, False])
        patterns = patterns_from_logits(logits, 1.02 ** 600)
        for p, b in zip(patterns, binarize_patterns(patterns)):
            np.testing.assert_allclose(p.values, b.values, atol=1e-6)

    def test_rejects_non_positive_sharpness(self):
        logits = PatternLogits(values=np.zeros((2, 8, 8)), frozen_black=[False, False])
        with pytest.raises(ValueError):
            patterns_from_logits(logits, 0.0)

    def test_init_zeroes_frozen_logits(self, rng):
        logits = init_logits(3, [True, False, False], rng)
        assert not np.any(logits.values[0])
        assert np.any(logits.values[1])
        assert logits.trainable_indices == [1, 2]


class TestBinarize:
    def test_threshold_ties_go_to_one(self):
        logits = PatternLogits(values=np.zeros((1, 8, 8)), frozen_black=[False])
        (b,) = binarize_patterns(patterns_from_logits(logits, 1.0))
        assert b.binary
        np.testing.assert_array_equal(b.values, 1.0)

    def test_black_stays_black(self, make_patterns):
        assert binarize_patterns(make_patterns(2))[0].is_black


class TestSplitDataset:
    def test_tail_is_held_out(self, tiny_dataset):
        train_set, val_set = split_dataset(tiny_dataset, 0.34)
        assert len(train_set) == 2 and len(val_set) == 1
        assert val_set[0] is tiny_dataset[2]

    def test_training_part_keeps_one_sample(self, make_lightfield):
        train_set, val_set = split_dataset([make_lightfield(4, 4)], 0.9)
        assert len(train_set) == 1 and not val_set


class TestTrain:
    def test_history_and_sharpness_schedule(self, tiny_dataset):
        cfg = _tiny_config(epochs=3, s_init=2.0, s_growth=1.5)
        logits, net, history = train(tiny_dataset, cfg)
        assert len(history) == 3
        assert [r.epoch for r in history.records] == [1, 2, 3]
        np.testing.assert_allclose([r.s for r in history.records], [2.0, 3.0, 4.5])
        assert all(math.isfinite(loss) for loss in history.losses)
        assert all(r.val_loss is not None for r in history.records)
        assert net.in_channels == 2

    def test_black_first_logits_stay_zero(self, tiny_dataset):
        cfg = _tiny_config(mode="baseline+bf+ra")
        logits, _, history = train(tiny_dataset, cfg)
        assert logits.frozen_black == [True, False, False]
        assert not np.any(logits.values[0])
        assert all(r.darkest_pattern != 1 for r in history.records)

    def test_trainable_logits_move(self, tiny_dataset):
        cfg = _tiny_config(mode="baseline")
        initial = init_logits(3, [False] * 3, np.random.default_rng(cfg.seed))
        logits, _, _ = train(tiny_dataset, cfg)
        for k in range(3):
            assert not np.array_equal(logits.values[k], initial.values[k])

    @pytest.mark.parametrize("sensor", [SensorConfig(noiseless=True), SensorConfig(seed=3)])
    def test_reproducible(self, tiny_dataset, sensor):
        cfg = _tiny_config(sensor=sensor)
        a, net_a, hist_a = train(tiny_dataset, cfg)
        b, net_b, hist_b = train(tiny_dataset, cfg)
        np.testing.assert_array_equal(a.values, b.values)
        np.testing.assert_array_equal(net_a.convs[0].weight.data, net_b.convs[0].weight.data)
        assert hist_a.losses == hist_b.losses

    def test_no_validation_split(self, tiny_dataset):
        _, _, history = train(tiny_dataset, _tiny_config(val_fraction=0.0, epochs=1))
        assert history.records[0].val_loss is None

    def test_rejects_empty_dataset(self):
        with pytest.raises(ValueError):
            train([], _tiny_config())

    def test_rejects_mixed_shapes(self, make_lightfield):
        with pytest.raises(ValueError):
            train([make_lightfield(6, 6), make_lightfield(6, 8)], _tiny_config())


class TestEvaluate:
    def test_constant_predictor(self):
        train_set = [LightField(values=np.full((4, 4, 8, 8), 0.2))]
        held_out = [LightField(values=np.full((4, 4, 8, 8), 0.5))]
        assert constant_predictor_mse(train_set, held_out) == pytest.approx(0.09)
        with pytest.raises(ValueError):
            constant_predictor_mse([], held_out)

    def test_reconstruct_shape_and_mismatch(self, make_lightfield, make_patterns, quiet_sensor):
        lf = make_lightfield(16, 16)
        net = ReconNet.build(4, depth=2)
        est, images = reconstruct(lf, make_patterns(4), net, quiet_sensor)
        assert est.values.shape == lf.values.shape
        assert len(images) == 3
        with pytest.raises(ValueError):
            reconstruct(lf, make_patterns(3), net, quiet_sensor)

    def test_report_for_constant_network(self, make_lightfield, make_patterns, quiet_sensor):
        dataset = [make_lightfield(16, 16) for _ in range(2)]
        net = ReconNet.build(4, depth=3, width=4, zero_last=True)
        report, outputs = evaluate(dataset, make_patterns(4), net, quiet_sensor, baseline_set=dataset)

        expected = float(np.mean([np.mean((lf.values - 0.5) ** 2) for lf in dataset]))
        assert report.mse == pytest.approx(expected)
        assert report.psnr == pytest.approx(10 * math.log10(1 / expected))
        assert report.samples == 2 and len(report.per_sample_psnr) == 2
        assert len(report.events.per_transition) == 3
        assert report.events.total == pytest.approx(sum(report.events.per_transition))
        assert report.constant_mse is not None
        assert report.event_model == "ra"
        for out in outputs:
            np.testing.assert_array_equal(out.values, 0.5)


@pytest.mark.slow
def test_training_beats_constant_and_untrained_predictors():
    fields = [synth_lightfield(i, 64, 64, 3) for i in range(200)]
    train_set, held_out = fields[:180], fields[180:]
    cfg = TrainConfig(
        n_patterns=4, epochs=50, batch_size=16, depth=4, width=16, lr=3e-3,
        mode="baseline+bf+ra", val_fraction=0.0, seed=0,
    )
    logits, net, history = train(train_set, cfg)
    patterns = patterns_from_logits(logits, history.records[-1].s)

    trained, _ = evaluate(held_out, patterns, net, cfg.sensor, baseline_set=train_set)
    untrained, _ = evaluate(held_out, patterns, ReconNet.build(4, cfg.depth, cfg.width, seed=1), cfg.sensor)

    assert trained.mse <= 0.7 * trained.constant_mse
    assert trained.psnr >= untrained.psnr + 3.0
