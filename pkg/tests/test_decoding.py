"""Activation maximization, its regularizers and pattern export."""

import csv

import numpy as np
import pytest

from src.decoding import (
    AmConfig,
    activation_maximization,
    decode_filters,
    dominant_frequency,
    export_results,
    lp_norm,
    total_variation,
)
from src.decoding.activation_maximization import FilterObjective, filter_count, target_layer, tv_denoise
from src.detectors.seiznet import build_seiznet
from src.eeg import SynthConfig, synth_dataset
from src.nn import Network
from src.utils.errors import ConfigError, DecodingError

from .conftest import tiny_specs


@pytest.fixture
def am_net():
    """Tiny SeizNet-shaped network over (2, 50) inputs."""
    return Network(tiny_specs(), (2, 50), seed=5)


class TestRegularizers:
    def test_total_variation_closed_forms(self):
        assert total_variation(np.full((2, 10), 3.0)) == 0.0
        step = np.zeros((2, 10))
        step[1, 5:] = 1.0
        assert total_variation(step) == 1.0
        alternating = np.tile([1.0, -1.0], 500)
        assert total_variation(np.stack([alternating, alternating])) == 2 * 2 * 999

    def test_lp_norm_closed_forms(self):
        assert lp_norm(np.zeros((2, 5)), 6.0) == 0.0
        one_hot = np.zeros((2, 5))
        one_hot[1, 3] = 2.0
        assert lp_norm(one_hot, 6.0) == pytest.approx(2.0)
        assert lp_norm(np.ones(400), 2.0) == pytest.approx(20.0)


class TestTotalVariationDenoise:
    def test_two_level_signal_shrinks_its_jump(self):
        out = tv_denoise(np.array([0.0, 0.0, 1.0, 1.0]), 0.4)
        np.testing.assert_allclose(out, [0.2, 0.2, 0.8, 0.8], atol=1e-12)

    def test_zero_weight_is_identity(self, rng):
        y = rng.standard_normal(50)
        np.testing.assert_array_equal(tv_denoise(y, 0.0), y)

    def test_large_weight_returns_the_mean(self, rng):
        y = rng.uniform(-1.0, 1.0, 1000)
        out = tv_denoise(y, 1e4)
        np.testing.assert_allclose(out, np.full(1000, y.mean()), atol=1e-9)
        assert total_variation(out) < 1e-9

    @pytest.mark.parametrize("weight", [0.05, 0.7, 3.0])
    def test_output_satisfies_optimality_conditions(self, rng, weight):
        y = rng.standard_normal(300)
        x = tv_denoise(y, weight)
        # cumulative residual is the dual variable: bounded by the weight, pinned at every jump
        c = np.cumsum(y - x)
        assert abs(c[-1]) < 1e-8
        assert np.all(np.abs(c[:-1]) <= weight + 1e-8)
        jumps = np.diff(x)
        moved = np.abs(jumps) > 1e-9
        np.testing.assert_allclose(c[:-1][moved], -weight * np.sign(jumps[moved]), atol=1e-8)
        assert total_variation(x) <= total_variation(y)

    def test_single_sample(self):
        np.testing.assert_array_equal(tv_denoise(np.array([2.5]), 1.0), [2.5])


class TestDominantFrequency:
    def test_pure_tone(self):
        t = np.arange(1000) / 200.0
        assert dominant_frequency(np.sin(2 * np.pi * 3.0 * t)) == pytest.approx(3.0, abs=0.2)

    def test_white_noise_is_finite(self, rng):
        assert np.isfinite(dominant_frequency(rng.standard_normal(1000)))

    def test_spike_wave_segment(self):
        (rec, ann), = synth_dataset(SynthConfig(n_subjects=1, duration_s=60.0, seizure_count_range=(1, 1),
                                                seizure_len_range_s=(10.0, 10.0), seed=21))
        onset, offset = ann.intervals[0]
        segment = rec.samples[0, int(round(onset * 200)):int(round(offset * 200))]
        assert 2.5 <= dominant_frequency(segment) <= 3.5


class TestTargets:
    def test_conv_blocks_and_output(self, am_net):
        assert am_net.layers[target_layer(am_net, 1, 0)].name == "bn1"
        assert am_net.layers[target_layer(am_net, 5, 1)].name == "dense2"
        assert filter_count(am_net, 2) == 4
        assert filter_count(am_net, 5) == 2

    @pytest.mark.parametrize("layer,unit", [(3, 0), (0, 0), (1, 3), (2, -1), (5, 2)])
    def test_bad_indices(self, am_net, layer, unit):
        with pytest.raises(DecodingError):
            activation_maximization(am_net, AmConfig(layer_index=layer, filter_index=unit, steps=1))

    @pytest.mark.parametrize("kwargs", [{"steps": 0}, {"step_size": 0.0}, {"tv_weight": -1.0},
                                        {"lp_p": 0.5}, {"input_range": (1.0, -1.0)}])
    def test_invalid_config(self, kwargs):
        with pytest.raises(ConfigError):
            AmConfig(**kwargs)

    def test_gradient_matches_finite_differences(self, am_net, rng):
        objective = FilterObjective(am_net, AmConfig(layer_index=2, filter_index=1, tv_weight=0.0, lp_weight=10.0))
        x = rng.uniform(-1.0, 1.0, size=(2, 50))
        _, _, grad = objective.value_and_gradient(x)
        h = 1e-6
        for idx in [(0, 3), (1, 17), (0, 40)]:
            plus, minus = x.copy(), x.copy()
            plus[idx] += h
            minus[idx] -= h
            numeric = (objective.value(plus) - objective.value(minus)) / (2 * h)
            assert grad[idx] == pytest.approx(numeric, rel=1e-4, abs=1e-7)


class TestActivationMaximization:
    def test_beats_random_inputs(self, am_net):
        cfg = AmConfig(layer_index=1, filter_index=2, steps=200, step_size=0.1, tv_weight=0.0, lp_weight=0.0, seed=3)
        result = activation_maximization(am_net, cfg)

        objective = FilterObjective(am_net, cfg)
        draws = np.random.default_rng(99).uniform(-1.0, 1.0, size=(100, 2, 50))
        assert result.activation >= max(objective.activation(x) for x in draws)

    @pytest.mark.parametrize("layer", [1, 4])
    def test_heavy_total_variation_flattens_seiznet_patterns(self, layer):
        model = build_seiznet(2, seed=0)
        cfg = AmConfig(layer_index=layer, filter_index=0, tv_weight=1e6, lp_weight=0.0)
        start = np.random.default_rng([cfg.seed, layer, 0]).uniform(-1.0, 1.0, size=(2, 1000))

        result = activation_maximization(model, cfg)

        assert result.pattern.shape == (2, 1000)
        assert total_variation(result.pattern) < 1e-2 * total_variation(start)

    def test_same_seed_same_result(self, am_net):
        cfg = AmConfig(layer_index=2, filter_index=3, steps=30, seed=8)
        first = activation_maximization(am_net, cfg)
        second = activation_maximization(am_net, cfg)
        np.testing.assert_array_equal(first.pattern, second.pattern)
        assert first.loss_history == second.loss_history
        assert first.activation == second.activation

    def test_pattern_stays_in_range(self, am_net):
        cfg = AmConfig(layer_index=1, filter_index=0, steps=50, step_size=5.0, tv_weight=0.0, lp_weight=0.0,
                       input_range=(-1.5, 1.5))
        result = activation_maximization(am_net, cfg)
        assert result.pattern.min() >= -1.5 and result.pattern.max() <= 1.5

    def test_objective_never_drops_below_start(self, am_net):
        result = activation_maximization(am_net, AmConfig(layer_index=2, filter_index=1, steps=40))
        assert result.objective >= result.initial_objective
        assert len(result.loss_history) == 40
        assert all(b >= a for a, b in zip(result.loss_history, result.loss_history[1:]))

    def test_output_unit(self, am_net):
        result = activation_maximization(am_net, AmConfig(layer_index=5, filter_index=1, steps=20))
        assert result.pattern.shape == (2, 50)
        assert len(result.dominant_hz) == 2
        assert np.isfinite(result.activation)

    def test_decode_every_filter(self, am_net):
        seen = []
        results = decode_filters(am_net, AmConfig(layer_index=2, steps=3), on_filter=lambda r: seen.append(r.filter_index))
        assert [r.filter_index for r in results] == seen == [0, 1, 2, 3]


class TestExport:
    @pytest.fixture
    def results(self, am_net):
        return decode_filters(am_net, AmConfig(layer_index=1, steps=5), filters=[0, 2])

    def test_csv_files(self, tmp_path, results):
        paths = export_results(results, tmp_path, plots=False)

        assert [p.name for p in paths] == ["layer1_filter00.csv", "layer1_filter02.csv"]
        pattern = np.loadtxt(paths[1], delimiter=",")
        np.testing.assert_allclose(pattern, results[1].pattern, rtol=1e-9)

        with open(tmp_path / "am_summary.csv", newline="") as f:
            rows = list(csv.reader(f))
        assert rows[0] == ["layer", "filter", "activation", "dominant_hz"]
        assert [r[:2] for r in rows[1:]] == [["1", "0"], ["1", "2"]]
        assert len(rows[1][3].split("|")) == 2

    def test_svg_plots_are_reproducible(self, tmp_path, results):
        export_results(results, tmp_path / "a", plots=True, channel_names=["C3", "C4"])
        export_results(results, tmp_path / "b", plots=True, channel_names=["C3", "C4"])
        svg = (tmp_path / "a" / "layer1_filter00.svg").read_bytes()
        assert svg.lstrip().startswith(b"<?xml")
        assert svg == (tmp_path / "b" / "layer1_filter00.svg").read_bytes()
