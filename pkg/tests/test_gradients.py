"""Finite-difference verification of the analytic backward pass."""

import numpy as np
import pytest

from sarbench.cnn.network import (
    PARAM_KEYS,
    backward,
    batch_loss,
    forward,
    init_params,
)

# Seed chosen so no relu sign or pooling argmax changes inside any central
# difference stencil: the loss is then smooth across every evaluation.
SMOOTH_SEED = 6


def tiny_setup(seed=SMOOTH_SEED, dtype=np.float64):
    rng = np.random.default_rng(seed)
    params = init_params(
        input_size=20, n_classes=3, n_filters=2, filter_size=5, rng=rng, dtype=dtype
    )
    x = rng.normal(size=(4, 20, 20)).astype(dtype)
    y = np.array([1, 2, 3, 1])
    return params, x, y


def numeric_gradient(params, key, x, y, h=1e-3):
    arr = getattr(params, key)
    grad = np.zeros_like(arr)
    it = np.nditer(arr, flags=["multi_index"])
    for _ in it:
        idx = it.multi_index
        saved = arr[idx]
        arr[idx] = saved + h
        up = batch_loss(params, x, y)
        arr[idx] = saved - h
        down = batch_loss(params, x, y)
        arr[idx] = saved
        grad[idx] = (up - down) / (2.0 * h)
    return grad


def scaled_relative_error(analytic, numeric):
    """Entrywise |a - f| relative to the larger of the entries and the
    parameter group's gradient scale (identically-zero gradients, like the
    conv bias under batch normalization, compare against the scale)."""
    scale = max(np.abs(numeric).max(), np.abs(analytic).max(), 1e-8)
    denom = np.maximum(np.maximum(np.abs(analytic), np.abs(numeric)), scale)
    return np.abs(analytic - numeric) / denom


class TestGradients:
    def test_all_parameter_groups_match_finite_differences(self):
        params, x, y = tiny_setup()
        _, cache = forward(params, x, train=True)
        grads = backward(params, cache, y)
        for key in PARAM_KEYS:
            numeric = numeric_gradient(params, key, x, y)
            err = scaled_relative_error(grads[key], numeric)
            assert err.max() < 1e-4, f"{key}: worst {err.max():.3e}"

    def test_conv_bias_gradient_vanishes_under_batchnorm(self):
        # shifting a channel by a constant is removed by the normalization
        params, x, y = tiny_setup()
        _, cache = forward(params, x, train=True)
        grads = backward(params, cache, y)
        assert np.abs(grads["conv_b"]).max() < 1e-12

    def test_zero_scale_channel_blocks_conv_gradient(self):
        params, x, y = tiny_setup()
        params.bn_scale[0] = 0.0
        _, cache = forward(params, x, train=True)
        grads = backward(params, cache, y)
        assert not grads["conv_w"][:, :, 0].any()
        assert grads["conv_w"][:, :, 1].any()

    def test_duplicated_sample_doubles_its_contribution(self):
        params, x, y = tiny_setup()
        xa, ya = x[:1], y[:1]
        _, cache = forward(params, xa, train=True)
        single = backward(params, cache, ya)
        xd = np.concatenate([xa, xa])
        yd = np.concatenate([ya, ya])
        _, cache = forward(params, xd, train=True)
        doubled = backward(params, cache, yd)
        # the batch mean divides by N, so the duplicate restores the
        # single-sample average exactly
        for key in PARAM_KEYS:
            assert np.allclose(doubled[key], single[key], atol=1e-12)

    def test_backward_requires_train_cache(self):
        params, x, y = tiny_setup()
        params.bn_batches = 1
        _, cache = forward(params, x, train=False)
        with pytest.raises(ValueError):
            backward(params, cache, y)
