"""SeizNet architecture, training and inference."""

import numpy as np
import pytest

from src.detectors import SeizNetDetector, build_seiznet, create_detector, load_detector, param_count, predict, train
from src.detectors.bpsvm import BPsvmDetector
from src.detectors.seiznet import TrainConfig, predict_proba
from src.pipeline import Epoch, Label, WindowingPolicy
from src.utils.errors import ChannelError, ConfigError, TrainingError


def toy_epochs(n_per_class, n_channels=1, seed=0):
    """3 Hz bursts (ictal) against white noise (interictal)."""
    rng = np.random.default_rng(seed)
    t = np.arange(1000) / 200.0
    epochs = []
    for i in range(n_per_class):
        burst = 3.0 * np.sin(2 * np.pi * 3.0 * t + rng.uniform(0, 2 * np.pi))
        ictal = burst + rng.standard_normal((n_channels, 1000))
        epochs.append(Epoch("S01", 5.0 * i, ictal, Label.ICTAL))
        epochs.append(Epoch("S01", 5.0 * i, rng.standard_normal((n_channels, 1000)), Label.INTERICTAL))
    return epochs


class TestArchitecture:
    def test_two_channel_parameter_count(self):
        assert param_count(build_seiznet(2)) == (200_352, 240)
        assert sum(param_count(build_seiznet(2))) == 200_592

    def test_eighteen_channel_parameter_count(self):
        assert param_count(build_seiznet(18)) == (201_632, 240)
        assert sum(param_count(build_seiznet(18))) == 201_872

    def test_conv1_accounts_for_the_difference(self):
        rows_2 = {name: count for name, _, _, count in build_seiznet(2).layer_table()}
        rows_18 = {name: count for name, _, _, count in build_seiznet(18).layer_table()}
        assert rows_18["conv1"] - rows_2["conv1"] == 1_280 == 8 * 10 * 16
        assert all(rows_2[name] == rows_18[name] for name in rows_2 if name != "conv1")

    def test_activation_lengths(self):
        model = build_seiznet(2)
        lengths = [shape[-1] for layer, shape in zip(model.layers, model.output_shapes())
                   if layer.spec.kind in ("conv_time", "maxpool_time", "flatten", "dense")]
        assert lengths == [991, 495, 486, 243, 224, 112, 93, 46, 2944, 50, 2]

    @pytest.mark.parametrize("batch", [1, 3])
    def test_forward_shapes_for_any_batch(self, batch):
        model = build_seiznet(2)
        x = np.zeros((batch, 2, 1000))
        for idx, shape in enumerate(model.output_shapes()):
            out, _ = model.forward(x, upto=idx + 1, record=False)
            assert out.shape == (batch,) + shape

    def test_filters_double_per_block(self):
        rows = build_seiznet(2).layer_table()
        conv = [(name, shape[0]) for name, kind, shape, _ in rows if kind == "conv_time"]
        assert conv == [("conv1", 8), ("conv2", 16), ("conv3", 32), ("conv4", 64)]
        assert [name for name, kind, _, _ in rows if kind == "batchnorm"] == ["bn1", "bn2", "bn3", "bn4"]

    def test_needs_a_channel(self):
        with pytest.raises(ConfigError):
            build_seiznet(0)


class TestTraining:
    def test_default_recipe(self):
        cfg = TrainConfig()
        assert (cfg.lr, cfg.batch_size, cfg.epochs) == (4.1e-3, 128, 100)

    @pytest.mark.parametrize("kwargs", [{"batch_size": 0}, {"epochs": 0}, {"validation_fraction": 1.0}, {"lr": -1.0}])
    def test_invalid_recipe(self, kwargs):
        with pytest.raises(ConfigError):
            TrainConfig(**kwargs)

    def test_loss_falls_on_a_small_separable_set(self):
        model = build_seiznet(1, seed=0)
        _, history = train(model, toy_epochs(32), TrainConfig(batch_size=16, epochs=15, seed=0))
        assert len(history.loss) == 15
        assert history.loss[-1] < 0.5 * history.loss[0]
        assert history.accuracy[-1] >= 0.9

    def test_same_seed_same_history(self):
        epochs = toy_epochs(8)
        cfg = TrainConfig(batch_size=8, epochs=2, seed=5)
        _, first = train(build_seiznet(1, seed=1), epochs, cfg)
        _, second = train(build_seiznet(1, seed=1), epochs, cfg)
        assert first.loss == second.loss
        assert first.accuracy == second.accuracy

    def test_zero_learning_rate_keeps_weights(self):
        model = build_seiznet(1, seed=2)
        before = {k: v.copy() for k, v in model.parameters().items()}
        running_before = model.states()["bn1.running_mean"].copy()

        train(model, toy_epochs(8), TrainConfig(lr=0.0, batch_size=8, epochs=3))

        for name, value in model.parameters().items():
            np.testing.assert_array_equal(value, before[name])
        assert not np.array_equal(model.states()["bn1.running_mean"], running_before)

    def test_validation_split_is_monitored(self):
        _, history = train(build_seiznet(1), toy_epochs(10),
                           TrainConfig(batch_size=8, epochs=2, validation_fraction=0.2))
        assert len(history.val_loss) == len(history.val_accuracy) == 2
        assert [row[0] for row in history.rows()] == [1, 2]

    def test_single_class_set(self):
        ictal_only = [e for e in toy_epochs(4) if e.label == Label.ICTAL]
        with pytest.raises(TrainingError, match="ictal"):
            train(build_seiznet(1), ictal_only, TrainConfig(epochs=1))

    def test_channel_mismatch(self):
        with pytest.raises(ChannelError):
            train(build_seiznet(2), toy_epochs(4, n_channels=1), TrainConfig(epochs=1))

    def test_progress_callback(self):
        calls = []
        train(build_seiznet(1), toy_epochs(4), TrainConfig(batch_size=8, epochs=2),
              on_epoch=lambda idx, loss, acc: calls.append(idx))
        assert calls == [0, 1]


class TestInference:
    def test_probabilities_sum_to_one(self):
        x = np.random.default_rng(0).standard_normal((5, 2, 1000))
        probs = predict_proba(build_seiznet(2), x)
        np.testing.assert_allclose(probs.sum(axis=1), 1.0, atol=1e-9)

    def test_repeated_predictions_are_identical(self):
        model = build_seiznet(1)
        epoch = toy_epochs(1)[0]
        assert predict(model, epoch) == predict(model, epoch)

    def test_fresh_model_is_undecided_on_average(self):
        rng = np.random.default_rng(8)
        x = rng.standard_normal((100, 2, 1000))
        x[:50] += 2.0 * np.sin(2 * np.pi * 3.0 * np.arange(1000) / 200.0)
        mean = predict_proba(build_seiznet(2, seed=0), x)[:, Label.ICTAL].mean()
        assert 0.2 <= mean <= 0.8

    def test_channel_mismatch(self):
        with pytest.raises(ChannelError):
            predict(build_seiznet(2), toy_epochs(1)[0])


class TestDetector:
    def test_augmented_training_policy(self):
        base = WindowingPolicy(ictal_stride_s=0.075)
        policy = SeizNetDetector(1).training_policy(base)
        assert policy.mode == "train"
        assert policy.ictal_stride_s == 0.075

    def test_threshold(self):
        detector = SeizNetDetector(1, threshold=0.7)
        np.testing.assert_array_equal(detector.is_ictal([0.2, 0.7, 0.9]), [False, False, True])
        assert not detector.is_deterministic

    def test_save_and_load(self, tmp_path):
        epochs = toy_epochs(4)
        detector = SeizNetDetector(1, train_config=TrainConfig(batch_size=8, epochs=1), init_seed=3)
        detector.fit(epochs)
        path = tmp_path / "seiznet_model.txt"
        detector.save(path)

        loaded = load_detector(path, threshold=0.4)
        assert isinstance(loaded, SeizNetDetector)
        assert loaded.threshold == 0.4
        assert loaded.n_channels == 1
        np.testing.assert_array_equal(loaded.decision(epochs), detector.decision(epochs))

    def test_create_detector_reads_config(self):
        config = {"seiznet": {"epochs": 3, "batch_size": 4}, "evaluation": {"threshold": 0.6}}
        detector = create_detector("seiznet", 2, config, seed=9)
        assert isinstance(detector, SeizNetDetector)
        assert detector.train_config.epochs == 3
        assert detector.train_config.seed == 9
        assert detector.threshold == 0.6
        assert isinstance(create_detector("bpsvm", 2, {}), BPsvmDetector)

    def test_unknown_method(self):
        with pytest.raises(ConfigError):
            create_detector("lstm", 2)

    def test_decision_channel_check(self):
        with pytest.raises(ChannelError):
            SeizNetDetector(2).decision(toy_epochs(1))
