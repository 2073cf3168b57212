"""The 7-layer classifier: conv -> batchnorm -> relu -> maxpool -> fully
connected -> softmax -> argmax, with its parameter container and the full
analytic backward pass."""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from . import layers

__all__ = [
    "ModelParams",
    "ForwardCache",
    "init_params",
    "forward",
    "backward",
    "batch_loss",
    "dimension_chain",
    "PARAM_KEYS",
]

# Order fixed for deterministic optimizer updates and checkpoint layout.
PARAM_KEYS = ("conv_w", "conv_b", "bn_scale", "bn_offset", "fc_w", "fc_b")


@dataclass
class ModelParams:
    """Learnable parameters, batch-norm running statistics and hyperparameters."""

    conv_w: np.ndarray
    conv_b: np.ndarray
    bn_scale: np.ndarray
    bn_offset: np.ndarray
    bn_mean: np.ndarray
    bn_var: np.ndarray
    fc_w: np.ndarray
    fc_b: np.ndarray
    input_size: int
    filter_size: int
    n_filters: int
    n_classes: int
    bn_eps: float = float(np.finfo(np.float64).eps)
    bn_momentum: float = 0.9
    bn_batches: int = 0
    normalize_inputs: bool = True

    def __post_init__(self):
        m = self.conv_out_size
        if m <= 0:
            raise ValueError(
                f"filter size {self.filter_size} too large for input {self.input_size}"
            )
        if m % 2 != 0:
            raise ValueError(
                f"conv output size {m} must be even for 2x2 pooling"
                f" (input {self.input_size}, filter {self.filter_size})"
            )
        kf, k, o = self.filter_size, self.n_filters, self.n_classes
        expected = {
            "conv_w": (kf, kf, k),
            "conv_b": (k,),
            "bn_scale": (k,),
            "bn_offset": (k,),
            "bn_mean": (k,),
            "bn_var": (k,),
            "fc_w": (o, self.feature_dim),
            "fc_b": (o,),
        }
        for name, shape in expected.items():
            arr = getattr(self, name)
            if arr.shape != shape:
                raise ValueError(f"{name} has shape {arr.shape}, expected {shape}")
        if np.any(self.bn_var < 0):
            raise ValueError("running variances must be >= 0")

    @property
    def conv_out_size(self) -> int:
        return self.input_size - self.filter_size + 1

    @property
    def pooled_size(self) -> int:
        return self.conv_out_size // 2

    @property
    def feature_dim(self) -> int:
        return self.pooled_size * self.pooled_size * self.n_filters

    @property
    def dtype(self) -> np.dtype:
        return self.conv_w.dtype

    def trainable(self) -> dict[str, np.ndarray]:
        return {key: getattr(self, key) for key in PARAM_KEYS}

    def clone(self) -> "ModelParams":
        arrays = {
            name: getattr(self, name).copy()
            for name in (*PARAM_KEYS, "bn_mean", "bn_var")
        }
        return replace(self, **arrays)


def init_params(
    input_size: int,
    n_classes: int,
    n_filters: int = 1,
    filter_size: int = 13,
    rng: np.random.Generator | None = None,
    dtype=np.float64,
    normalize_inputs: bool = True,
) -> ModelParams:
    """Fan-in-scaled uniform initialization of the weights; biases zero,
    batch-norm scale one / offset zero, running statistics at (0, 1)."""
    if rng is None:
        rng = np.random.default_rng(0)
    kf, k, o = filter_size, n_filters, n_classes
    pooled = (input_size - kf + 1) // 2
    feat = pooled * pooled * k
    conv_bound = 1.0 / np.sqrt(kf * kf)
    fc_bound = 1.0 / np.sqrt(feat)
    return ModelParams(
        conv_w=rng.uniform(-conv_bound, conv_bound, size=(kf, kf, k)).astype(dtype),
        conv_b=np.zeros(k, dtype=dtype),
        bn_scale=np.ones(k, dtype=dtype),
        bn_offset=np.zeros(k, dtype=dtype),
        bn_mean=np.zeros(k, dtype=dtype),
        bn_var=np.ones(k, dtype=dtype),
        fc_w=rng.uniform(-fc_bound, fc_bound, size=(o, feat)).astype(dtype),
        fc_b=np.zeros(o, dtype=dtype),
        input_size=input_size,
        filter_size=filter_size,
        n_filters=n_filters,
        n_classes=n_classes,
        normalize_inputs=normalize_inputs,
    )


@dataclass
class ForwardCache:
    """Activations retained for the backward pass plus per-layer shapes."""

    x: np.ndarray
    bn_cache: tuple | None
    relu_mask: np.ndarray
    pool_idx: np.ndarray
    flat: np.ndarray
    probs: np.ndarray
    bn_batch_stats: tuple | None
    layer_shapes: list = field(default_factory=list)


def forward(params: ModelParams, x: np.ndarray, train: bool) -> tuple[np.ndarray, ForwardCache]:
    """Run the network on a batch (n, P, P) and return class probabilities.

    Train mode normalizes with batch statistics and reports the updated
    running statistics in the cache (the caller decides whether to apply
    them); inference mode uses the stored running statistics and requires
    at least one training batch to have been seen.
    """
    x = np.asarray(x)
    if x.ndim == 2:
        x = x[None]
    if x.shape[1] != params.input_size or x.shape[2] != params.input_size:
        raise ValueError(
            f"input shape {x.shape[1:]} does not match model input size {params.input_size}"
        )
    if not train and params.bn_batches == 0:
        raise ValueError("inference requested before any training statistics exist")

    conv = layers.conv_forward(x, params.conv_w, params.conv_b)
    bn, bn_cache, bn_stats = layers.batchnorm_forward(
        conv,
        params.bn_scale,
        params.bn_offset,
        params.bn_mean,
        params.bn_var,
        params.bn_eps,
        train=train,
        momentum=params.bn_momentum,
    )
    act, relu_mask = layers.relu_forward(bn)
    pooled, pool_idx = layers.maxpool_forward(act)
    flat = pooled.reshape(pooled.shape[0], -1)
    logits = layers.fc_forward(flat, params.fc_w, params.fc_b)
    probs = layers.softmax(logits)
    shapes = [
        x.shape[1:],
        conv.shape[1:],
        bn.shape[1:],
        act.shape[1:],
        pooled.shape[1:],
        logits.shape[1:],
        probs.shape[1:],
        (1,),
    ]
    cache = ForwardCache(
        x=x,
        bn_cache=bn_cache,
        relu_mask=relu_mask,
        pool_idx=pool_idx,
        flat=flat,
        probs=probs,
        bn_batch_stats=bn_stats,
        layer_shapes=shapes,
    )
    return probs, cache


def backward(params: ModelParams, cache: ForwardCache, labels: np.ndarray) -> dict[str, np.ndarray]:
    """Gradients of the batch cross-entropy with respect to every trainable
    parameter, by reverse-mode differentiation of the forward pass."""
    if cache.bn_cache is None:
        raise ValueError("backward needs a train-mode forward cache")
    dlogits = layers.softmax_cross_entropy_grad(cache.probs, labels)
    dflat, dfc_w, dfc_b = layers.fc_backward(dlogits, cache.flat, params.fc_w)
    n = cache.x.shape[0]
    h = params.pooled_size
    dpool = dflat.reshape(n, h, h, params.n_filters)
    dact = layers.maxpool_backward(dpool, cache.pool_idx)
    dbn = layers.relu_backward(dact, cache.relu_mask)
    dconv, dscale, doffset = layers.batchnorm_backward(dbn, params.bn_scale, cache.bn_cache)
    # the convolution is the first layer, so its input gradient is unused
    _, dconv_w, dconv_b = layers.conv_backward(
        dconv, cache.x, params.conv_w, need_dx=False
    )
    return {
        "conv_w": dconv_w,
        "conv_b": dconv_b,
        "bn_scale": dscale,
        "bn_offset": doffset,
        "fc_w": dfc_w,
        "fc_b": dfc_b,
    }


def batch_loss(params: ModelParams, x: np.ndarray, labels: np.ndarray, train: bool = True) -> float:
    """Cross-entropy of a batch under the current parameters (no side effects)."""
    probs, _ = forward(params, x, train=train)
    return layers.cross_entropy(probs, labels)


def dimension_chain(input_size: int, filter_size: int, n_filters: int, n_classes: int) -> list[tuple]:
    """Expected per-layer output shapes for one sample, ending at the
    scalar class decision."""
    m = input_size - filter_size + 1
    k, o = n_filters, n_classes
    return [
        (input_size, input_size),
        (m, m, k),
        (m, m, k),
        (m, m, k),
        (m // 2, m // 2, k),
        (o,),
        (o,),
        (1,),
    ]
