import math

import numpy as np
import pytest

from sarbench.cnn import layers


class TestConvForward:
    def test_constant_input_and_filter(self):
        x = np.ones((1, 20, 20))
        w = np.ones((13, 13, 1))
        b = np.zeros(1)
        out = layers.conv_forward(x, w, b)
        assert out.shape == (1, 8, 8, 1)
        assert np.allclose(out, 169.0)

    def test_centered_delta_filter_crops_input(self):
        rng = np.random.default_rng(0)
        x = rng.normal(size=(2, 15, 15))
        w = np.zeros((5, 5, 1))
        w[2, 2, 0] = 1.0
        out = layers.conv_forward(x, w, np.zeros(1))
        # delta at filter center selects the central 11x11 crop
        assert np.allclose(out[..., 0], x[:, 2:13, 2:13])

    def test_zero_input_gives_bias(self):
        out = layers.conv_forward(np.zeros((3, 10, 10)), np.ones((3, 3, 2)), np.array([1.5, -2.0]))
        assert np.allclose(out[..., 0], 1.5)
        assert np.allclose(out[..., 1], -2.0)

    @pytest.mark.parametrize("k", [3, 8])
    def test_matches_brute_force(self, k):
        # k=3 runs the offset path, k=8 the spectral path
        rng = np.random.default_rng(1)
        x = rng.normal(size=(2, 9, 9))
        w = rng.normal(size=(4, 4, k))
        b = rng.normal(size=k)
        out = layers.conv_forward(x, w, b)
        m = 9 - 4 + 1
        for n in range(2):
            for i in range(m):
                for j in range(m):
                    for c in range(k):
                        expected = (x[n, i : i + 4, j : j + 4] * w[:, :, c]).sum() + b[c]
                        assert out[n, i, j, c] == pytest.approx(expected, rel=1e-9, abs=1e-9)

    def test_paths_agree(self):
        rng = np.random.default_rng(9)
        x = rng.normal(size=(3, 16, 16))
        w5 = rng.normal(size=(5, 5, 5))
        w4 = w5[:, :, :4]
        out5 = layers.conv_forward(x, w5, np.zeros(5))
        out4 = layers.conv_forward(x, w4, np.zeros(4))
        assert np.allclose(out5[..., :4], out4, atol=1e-10)
        dout = rng.normal(size=out5.shape)
        dx5, dw5, db5 = layers.conv_backward(dout, x, w5)
        dx4, dw4, db4 = layers.conv_backward(dout[..., :4], x, w4)
        assert np.allclose(dw5[:, :, :4], dw4, atol=1e-10)
        assert np.allclose(db5[:4], db4, atol=1e-12)

    def test_backward_skips_input_gradient_on_request(self):
        rng = np.random.default_rng(10)
        x = rng.normal(size=(2, 10, 10))
        for k in (2, 8):
            w = rng.normal(size=(3, 3, k))
            dout = rng.normal(size=(2, 8, 8, k))
            dx, dw, db = layers.conv_backward(dout, x, w, need_dx=False)
            assert dx is None
            dx2, dw2, db2 = layers.conv_backward(dout, x, w, need_dx=True)
            assert dx2 is not None
            assert np.allclose(dw, dw2) and np.allclose(db, db2)

    def test_filter_larger_than_input_rejected(self):
        with pytest.raises(ValueError):
            layers.conv_forward(np.zeros((1, 4, 4)), np.zeros((5, 5, 1)), np.zeros(1))


class TestBatchNorm:
    def test_constant_channel_maps_to_offset(self):
        x = np.full((2, 4, 4, 1), 3.7)
        out, _, _ = layers.batchnorm_forward(
            x, np.ones(1), np.array([0.25]), np.zeros(1), np.ones(1),
            eps=np.finfo(np.float64).eps, train=True,
        )
        assert np.allclose(out, 0.25)

    def test_normalizes_to_zero_mean_unit_variance(self):
        rng = np.random.default_rng(2)
        x = rng.normal(3.0, 2.5, size=(4, 6, 6, 2))
        out, _, _ = layers.batchnorm_forward(
            x, np.ones(2), np.zeros(2), np.zeros(2), np.ones(2),
            eps=np.finfo(np.float64).eps, train=True,
        )
        for k in range(2):
            assert out[..., k].mean() == pytest.approx(0.0, abs=1e-6)
            assert out[..., k].var() == pytest.approx(1.0, abs=1e-6)

    def test_affine_parameters_set_mean_and_std(self):
        rng = np.random.default_rng(3)
        x = rng.normal(size=(8, 5, 5, 1))
        out, _, _ = layers.batchnorm_forward(
            x, np.array([2.0]), np.array([3.0]), np.zeros(1), np.ones(1),
            eps=np.finfo(np.float64).eps, train=True,
        )
        assert out.mean() == pytest.approx(3.0, abs=1e-6)
        assert out.std() == pytest.approx(2.0, abs=1e-6)

    def test_running_statistics_momentum(self):
        x = np.full((1, 2, 2, 1), 10.0)
        _, _, (new_mean, new_var) = layers.batchnorm_forward(
            x, np.ones(1), np.zeros(1), np.array([1.0]), np.array([4.0]),
            eps=1e-8, train=True, momentum=0.9,
        )
        assert new_mean[0] == pytest.approx(0.9 * 1.0 + 0.1 * 10.0)
        assert new_var[0] == pytest.approx(0.9 * 4.0 + 0.1 * 0.0)

    def test_inference_uses_running_statistics(self):
        x = np.full((1, 2, 2, 1), 5.0)
        out, cache, stats = layers.batchnorm_forward(
            x, np.ones(1), np.zeros(1), np.array([3.0]), np.array([4.0]),
            eps=0.0, train=False,
        )
        assert cache is None and stats is None
        assert np.allclose(out, (5.0 - 3.0) / 2.0)


class TestRelu:
    def test_values(self):
        out, _ = layers.relu_forward(np.array([-3.0, 0.0, 2.5]))
        assert out.tolist() == [0.0, 0.0, 2.5]

    def test_idempotent(self):
        rng = np.random.default_rng(4)
        x = rng.normal(size=(3, 4))
        once, _ = layers.relu_forward(x)
        twice, _ = layers.relu_forward(once)
        assert (once == twice).all()


class TestMaxPool:
    def test_single_block(self):
        x = np.array([[1.0, 2.0], [3.0, 4.0]]).reshape(1, 2, 2, 1)
        out, _ = layers.maxpool_forward(x)
        assert out.reshape(()) == 4.0

    def test_constant_input(self):
        out, _ = layers.maxpool_forward(np.full((2, 6, 6, 3), 1.25))
        assert out.shape == (2, 3, 3, 3)
        assert (out == 1.25).all()

    def test_min_max_duality(self):
        rng = np.random.default_rng(5)
        x = rng.normal(size=(2, 8, 8, 2))
        pooled, _ = layers.maxpool_forward(-x)
        # min-pool oracle over explicit blocks
        blocks = x.reshape(2, 4, 2, 4, 2, 2)
        min_pool = blocks.min(axis=(2, 4))
        assert np.allclose(pooled, -min_pool)

    def test_odd_size_rejected(self):
        with pytest.raises(ValueError):
            layers.maxpool_forward(np.zeros((1, 5, 5, 1)))

    def test_blocks_do_not_overlap(self):
        x = np.arange(16, dtype=float).reshape(1, 4, 4, 1)
        out, _ = layers.maxpool_forward(x)
        assert out[0, :, :, 0].tolist() == [[5.0, 7.0], [13.0, 15.0]]


class TestFullyConnected:
    def test_zero_weights_give_bias(self):
        x = np.ones((2, 6))
        out = layers.fc_forward(x, np.zeros((3, 6)), np.array([1.0, 2.0, 3.0]))
        assert np.allclose(out, [1.0, 2.0, 3.0])

    def test_zero_input_gives_bias(self):
        out = layers.fc_forward(np.zeros((1, 6)), np.ones((2, 6)), np.array([0.5, -0.5]))
        assert np.allclose(out, [0.5, -0.5])

    def test_one_hot_selects_column(self):
        rng = np.random.default_rng(6)
        w = rng.normal(size=(4, 9))
        b = rng.normal(size=4)
        x = np.zeros((1, 9))
        x[0, 5] = 1.0
        out = layers.fc_forward(x, w, b)
        assert np.allclose(out[0], w[:, 5] + b)

    def test_dimension_mismatch_rejected(self):
        with pytest.raises(ValueError):
            layers.fc_forward(np.zeros((1, 5)), np.zeros((2, 6)), np.zeros(2))


class TestSoftmax:
    def test_uniform_logits(self):
        probs = layers.softmax(np.zeros((1, 4)))
        assert np.allclose(probs, 0.25)

    def test_closed_form(self):
        probs = layers.softmax(np.array([[math.log(2.0), 0.0]]))
        assert np.allclose(probs, [2.0 / 3.0, 1.0 / 3.0])

    def test_shift_invariance(self):
        rng = np.random.default_rng(7)
        z = rng.normal(size=(5, 6))
        a = layers.softmax(z)
        b = layers.softmax(z + 123.456)
        assert np.abs(a - b).max() < 1e-12

    def test_overflow_safe(self):
        probs = layers.softmax(np.array([[1000.0, 1000.0, 0.0]]))
        assert np.isfinite(probs).all()
        assert probs.sum() == pytest.approx(1.0)


class TestCrossEntropy:
    def test_perfect_prediction(self):
        probs = np.array([[1.0, 0.0, 0.0]])
        assert layers.cross_entropy(probs, np.array([1])) == 0.0

    def test_half_confidence(self):
        probs = np.array([[0.5, 0.5]])
        assert layers.cross_entropy(probs, np.array([1])) == pytest.approx(math.log(2.0))

    def test_nonnegative(self):
        rng = np.random.default_rng(8)
        z = rng.normal(size=(20, 4))
        probs = layers.softmax(z)
        labels = rng.integers(1, 5, size=20)
        assert layers.cross_entropy(probs, labels) >= 0.0

    def test_log_clamped_at_floor(self):
        probs = np.array([[0.0, 1.0]])
        loss = layers.cross_entropy(probs, np.array([1]))
        assert loss == pytest.approx(-math.log(layers.PROB_FLOOR))

    def test_label_out_of_range_rejected(self):
        probs = np.array([[0.5, 0.5]])
        with pytest.raises(ValueError):
            layers.cross_entropy(probs, np.array([3]))


class TestClassify:
    def test_plain_argmax(self):
        rng = np.random.default_rng(0)
        assert layers.classify(np.array([0.1, 0.7, 0.2]), rng).tolist() == [2]

    def test_one_hot(self):
        rng = np.random.default_rng(0)
        assert layers.classify(np.array([[0.0, 0.0, 1.0]]), rng).tolist() == [3]

    def test_tie_broken_uniformly(self):
        rng = np.random.default_rng(123)
        probs = np.tile([0.5, 0.5], (10_000, 1))
        preds = layers.classify(probs, rng)
        freq = (preds == 1).mean()
        assert abs(freq - 0.5) <= 0.05
        assert set(np.unique(preds)) == {1, 2}

    def test_tie_never_selects_non_tied_class(self):
        rng = np.random.default_rng(9)
        probs = np.tile([0.4, 0.4, 0.2], (1000, 1))
        preds = layers.classify(probs, rng)
        assert set(np.unique(preds)) == {1, 2}
