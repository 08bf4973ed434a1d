"""Layer kernels, backward pass, Adam, gradient checking and weight files."""

import numpy as np
import pytest

from src.nn import (
    AdamState,
    ForwardContext,
    GradCheckReport,
    LayerSpec,
    Network,
    adam_step,
    batchnorm_forward,
    conv_time_forward,
    dense_forward,
    dropout_forward,
    grad_check,
    load_weights,
    maxpool_time_forward,
    save_weights,
    softmax_ce,
)
from src.nn.functional import one_hot
from src.utils.errors import ConfigError, IngestionError, ShapeError

from .conftest import tiny_specs


FROZEN = ForwardContext(bn_mode="train", dropout=False, update_stats=False)


class TestConvolution:
    def test_hand_dot_products(self):
        out = conv_time_forward(np.array([[1.0, 2.0, 3.0]]), np.array([[[1.0, 1.0]]]), np.zeros(1))
        np.testing.assert_array_equal(out, [[3.0, 5.0]])

    def test_valid_length(self, rng):
        out = conv_time_forward(rng.standard_normal((2, 1000)), rng.standard_normal((8, 2, 10)), np.zeros(8))
        assert out.shape == (8, 991)

    def test_zero_weights_give_bias(self, rng):
        out = conv_time_forward(rng.standard_normal((4, 3, 50)), np.zeros((5, 3, 7)), np.full(5, 2.5))
        np.testing.assert_array_equal(out, 2.5)

    def test_sums_over_input_channels(self, rng):
        x = rng.standard_normal((2, 20))
        w = rng.standard_normal((1, 2, 3))
        expected = [sum(np.dot(x[c, t:t + 3], w[0, c]) for c in range(2)) for t in range(18)]
        np.testing.assert_allclose(conv_time_forward(x, w, np.zeros(1))[0], expected)

    def test_kernel_longer_than_input(self):
        with pytest.raises(ShapeError):
            conv_time_forward(np.zeros((1, 5)), np.zeros((1, 1, 6)), np.zeros(1))


class TestMaxPool:
    def test_pairs(self):
        out, _ = maxpool_time_forward(np.array([[1.0, 3.0, 2.0, 5.0]]))
        np.testing.assert_array_equal(out, [[3.0, 5.0]])

    @pytest.mark.parametrize("length,expected", [(991, 495), (93, 46), (486, 243)])
    def test_odd_tail_dropped(self, length, expected):
        out, argmax = maxpool_time_forward(np.zeros((8, length)))
        assert out.shape == (8, expected)
        assert argmax.shape == (8, expected)

    def test_too_short(self):
        with pytest.raises(ShapeError):
            maxpool_time_forward(np.zeros((1, 1)))


class TestBatchNorm:
    def test_train_mode_standardizes(self, rng):
        x = rng.normal(3.0, 7.0, size=(16, 4, 50))
        _, cache = batchnorm_forward(x, np.ones(4), np.zeros(4), np.zeros(4), np.ones(4), mode="train")
        xhat = cache["xhat"]
        var = np.var(x, axis=(0, 2))
        assert np.all(np.abs(xhat.mean(axis=(0, 2))) < 1e-5)
        np.testing.assert_allclose(xhat.var(axis=(0, 2)), var / (var + 1e-3), rtol=1e-9)

    def test_train_mode_exact_without_epsilon(self, rng):
        x = rng.normal(3.0, 7.0, size=(16, 4, 50))
        _, cache = batchnorm_forward(x, np.ones(4), np.zeros(4), np.zeros(4), np.ones(4),
                                     mode="train", epsilon=0.0)
        var = cache["xhat"].var(axis=(0, 2))
        assert np.all(np.abs(var - 1.0) < 1e-4)

    def test_infer_identity_with_unit_statistics(self, rng):
        x = rng.standard_normal((2, 3, 10))
        out, _ = batchnorm_forward(x, np.ones(3), np.zeros(3), np.zeros(3), np.ones(3), mode="infer")
        np.testing.assert_allclose(out, x / np.sqrt(1.0 + 1e-3))

    def test_constant_input_gives_beta(self):
        out, _ = batchnorm_forward(np.full((4, 2, 10), 7.0), np.ones(2), np.full(2, 0.5),
                                   np.zeros(2), np.ones(2), mode="train")
        np.testing.assert_allclose(out, 0.5)

    def test_running_statistics_move(self, rng):
        x = rng.normal(2.0, 3.0, size=(8, 1, 100))
        mean, var = np.zeros(1), np.ones(1)
        batchnorm_forward(x, np.ones(1), np.zeros(1), mean, var, mode="train", momentum=0.9)
        assert mean[0] == pytest.approx(0.1 * x.mean())
        assert var[0] == pytest.approx(0.9 + 0.1 * x.var())


class TestDropout:
    def test_rate_zero_is_identity(self, rng):
        x = rng.standard_normal(100)
        for mode in ("train", "infer"):
            out, mask = dropout_forward(x, 0.0, mode, rng)
            assert out is x and mask is None

    def test_infer_is_identity(self, rng):
        x = rng.standard_normal(100)
        out, _ = dropout_forward(x, 0.5, "infer")
        assert out is x

    def test_keep_fraction_and_expectation(self):
        x = np.ones(100_000)
        out, mask = dropout_forward(x, 0.2, "train", np.random.default_rng(5))
        kept = np.count_nonzero(mask) / x.size
        assert abs(kept - 0.8) < 0.01
        np.testing.assert_allclose(out[mask > 0], 1.25)
        assert abs(out.mean() - 1.0) < 0.02

    def test_invalid_rate(self):
        with pytest.raises(ValueError):
            dropout_forward(np.ones(3), 1.0, "train", np.random.default_rng(0))


class TestDense:
    def test_parameter_count_of_first_dense_layer(self):
        net = Network([LayerSpec("flatten", "flatten"), LayerSpec("dense", "dense1", {"out_units": 50})],
                      (64, 46))
        assert net.param_count() == (147_250, 0)

    def test_identity_weights(self, rng):
        x = rng.standard_normal((3, 4))
        np.testing.assert_allclose(dense_forward(x, np.eye(4), np.full(4, 0.5)), x + 0.5)

    def test_zero_weights(self):
        np.testing.assert_array_equal(dense_forward(np.ones(3), np.zeros((2, 3)), np.array([1.0, -2.0])), [1.0, -2.0])

    def test_shape_mismatch(self):
        with pytest.raises(ShapeError):
            dense_forward(np.ones(3), np.zeros((2, 4)), np.zeros(2))


class TestSoftmaxCrossEntropy:
    def test_equal_logits(self):
        loss, _ = softmax_ce(np.zeros((4, 2)), one_hot(np.array([0, 1, 1, 0])))
        assert loss == pytest.approx(np.log(2.0))

    def test_saturated_margin(self):
        loss, _ = softmax_ce(np.array([[0.0, 20.0]]), np.array([[0.0, 1.0]]))
        assert loss < 1e-8

    def test_gradient_matches_finite_differences(self, rng):
        logits = rng.standard_normal((3, 2))
        labels = one_hot(np.array([1, 0, 1]))
        _, grad = softmax_ce(logits, labels)
        h = 1e-5
        numeric = np.zeros_like(logits)
        for idx in np.ndindex(logits.shape):
            plus, minus = logits.copy(), logits.copy()
            plus[idx] += h
            minus[idx] -= h
            numeric[idx] = (softmax_ce(plus, labels)[0] - softmax_ce(minus, labels)[0]) / (2 * h)
        np.testing.assert_allclose(grad, numeric, rtol=1e-6, atol=1e-10)


class TestNetwork:
    def test_output_shapes(self, tiny_net):
        assert tiny_net.output_shapes()[-1] == (2,)
        out, _ = tiny_net.forward(np.zeros((5, 2, 32)))
        assert out.shape == (5, 2)

    def test_rejects_wrong_input(self, tiny_net):
        with pytest.raises(ShapeError):
            tiny_net.forward(np.zeros((5, 3, 32)))

    def test_backward_without_forward(self, tiny_net):
        with pytest.raises(RuntimeError):
            tiny_net.backward(None, np.zeros((1, 2)))

    def test_zero_upstream_gradient(self, tiny_net, rng):
        out, tape = tiny_net.forward(rng.standard_normal((4, 2, 32)), FROZEN)
        grads, dx = tiny_net.backward(tape, np.zeros_like(out))
        assert all(not np.any(g) for g in grads.values())
        assert not np.any(dx)

    def test_duplicated_sample_gets_identical_input_gradient(self, tiny_net, rng):
        x = rng.standard_normal((3, 2, 32))
        x[2] = x[0]
        ctx = ForwardContext(bn_mode="infer", dropout=False, update_stats=False)
        out, tape = tiny_net.forward(x, ctx)
        _, dx = tiny_net.backward(tape, np.ones_like(out))
        np.testing.assert_array_equal(dx[0], dx[2])

    def test_same_seed_same_weights(self):
        a = Network(tiny_specs(), (2, 32), seed=4)
        b = Network(tiny_specs(), (2, 32), seed=4)
        for (name, wa), wb in zip(a.parameters().items(), b.parameters().values()):
            assert np.array_equal(wa, wb), name

    def test_bad_spec(self):
        with pytest.raises(ConfigError):
            LayerSpec("dropout", "drop", {"rate": 1.5})
        with pytest.raises(ConfigError):
            LayerSpec("pooling", "pool")


class TestGradCheck:
    @pytest.fixture
    def batch(self, rng):
        x = rng.standard_normal((4, 2, 32))
        return x, one_hot(np.array([0, 1, 1, 0]))

    def test_every_layer_matches_finite_differences(self, tiny_net, batch):
        report = grad_check(tiny_net, batch, tolerance=1e-4, perturbation=1e-3, samples_per_tensor=8)
        assert report.passed, report.per_tensor
        assert set(report.per_tensor) == set(tiny_net.parameters()) | {"input"}
        assert report.n_checked > 0

    def test_corrupted_gradient_fails(self, tiny_net, batch):
        def corrupt(grads):
            grads["dense2.weight"] *= 1.1

        report = grad_check(tiny_net, batch, gradient_hook=corrupt, samples_per_tensor=12)
        assert not report.passed
        assert report.per_tensor["dense2.weight"] > 1e-4

    def test_nothing_checked_is_a_failure(self, tiny_net, batch):
        report = grad_check(tiny_net, batch, samples_per_tensor=0)
        assert report.n_checked == 0
        assert not report.passed

    def test_all_kinks_skipped_is_a_failure(self):
        report = GradCheckReport(max_rel_error=0.0, tolerance=1e-4, n_checked=0, n_kinks_skipped=12)
        assert not report.passed
        assert GradCheckReport(max_rel_error=0.0, tolerance=1e-4, n_checked=1, n_kinks_skipped=12).passed

    def test_repeatable(self, batch):
        first = grad_check(Network(tiny_specs(), (2, 32), seed=2), batch, seed=9)
        second = grad_check(Network(tiny_specs(), (2, 32), seed=2), batch, seed=9)
        assert first == second

    def test_weights_restored(self, tiny_net, batch):
        before = {k: v.copy() for k, v in tiny_net.parameters().items()}
        grad_check(tiny_net, batch)
        for name, value in tiny_net.parameters().items():
            np.testing.assert_array_equal(value, before[name])


class TestAdam:
    def test_zero_gradient_leaves_parameters(self):
        params = {"w": np.array([1.0, -2.0])}
        adam_step(params, {"w": np.zeros(2)}, AdamState())
        np.testing.assert_array_equal(params["w"], [1.0, -2.0])

    def test_first_step_moves_by_lr(self):
        params = {"w": np.array([0.0])}
        state = adam_step(params, {"w": np.array([0.3])}, AdamState(lr=4.1e-3))
        assert state.step == 1
        assert params["w"][0] == pytest.approx(-4.1e-3, rel=1e-5)

    def test_constant_gradient_moves_monotonically(self):
        params = {"w": np.array([1.0])}
        state = AdamState()
        trajectory = [1.0]
        for _ in range(2):
            adam_step(params, {"w": np.array([-2.0])}, state)
            trajectory.append(params["w"][0])
        assert trajectory[0] < trajectory[1] < trajectory[2]
        assert np.all(state.v["w"] >= 0)

    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            adam_step({"w": np.zeros(2)}, {"w": np.zeros(3)}, AdamState())


class TestWeightsFile:
    def test_round_trip(self, tmp_path, tiny_net, rng):
        # move the running statistics off their initial values
        tiny_net.forward(rng.standard_normal((4, 2, 32)), ForwardContext(bn_mode="train", dropout=False))
        path = tmp_path / "weights.txt"
        save_weights(tiny_net, path)
        loaded = load_weights(path)

        assert path.read_text().startswith("arch n_channels=2 input_len=32")
        for name, value in tiny_net.parameters().items():
            np.testing.assert_array_equal(loaded.parameters()[name], value)
        for name, value in tiny_net.states().items():
            np.testing.assert_array_equal(loaded.states()[name], value)
        x = rng.standard_normal((3, 2, 32))
        np.testing.assert_array_equal(loaded.forward(x)[0], tiny_net.forward(x)[0])

    def test_running_statistics_flagged(self, tmp_path, tiny_net):
        path = tmp_path / "weights.txt"
        save_weights(tiny_net, path)
        stats = [line for line in path.read_text().splitlines() if "running_" in line.split()[0]]
        assert stats and all(line.split()[2] == "nontrainable" for line in stats)

    def test_missing_descriptor(self, tmp_path):
        path = tmp_path / "weights.txt"
        path.write_text("conv1.weight 1 0.0\n")
        with pytest.raises(IngestionError):
            load_weights(path)

    def test_wrong_tensor_size_names_line(self, tmp_path, tiny_net):
        path = tmp_path / "weights.txt"
        save_weights(tiny_net, path)
        lines = path.read_text().splitlines()
        lines[1] = " ".join(lines[1].split()[:-1])
        path.write_text("\n".join(lines) + "\n")
        with pytest.raises(IngestionError) as excinfo:
            load_weights(path)
        assert excinfo.value.line == 2

    def test_missing_tensor(self, tmp_path, tiny_net):
        path = tmp_path / "weights.txt"
        save_weights(tiny_net, path)
        lines = path.read_text().splitlines()
        path.write_text("\n".join(lines[:-1]) + "\n")
        with pytest.raises(IngestionError, match="missing"):
            load_weights(path)
