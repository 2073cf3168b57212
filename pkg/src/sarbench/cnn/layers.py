"""Layer primitives for the 7-layer classifier, with analytic backward passes.

All forward functions are batch-first over numpy arrays. Convolution is
valid (no padding), stride 1, implemented as patch-matrix products; the
patch matrices are rebuilt in chunks to bound transient memory.
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "conv_forward",
    "conv_backward",
    "batchnorm_forward",
    "batchnorm_backward",
    "relu_forward",
    "relu_backward",
    "maxpool_forward",
    "maxpool_backward",
    "fc_forward",
    "fc_backward",
    "softmax",
    "cross_entropy",
    "softmax_cross_entropy_grad",
    "classify",
    "PROB_FLOOR",
]

# With few filters an accumulation over filter offsets beats transforms;
# larger filter banks go through the spectral path.
_OFFSET_PATH_MAX_K = 4

# Spectral product tensors are chunked to roughly this many bytes.
_FFT_CHUNK_BYTES = 192 * 2**20

# Probabilities are clamped at this floor inside the log of the loss.
PROB_FLOOR = 1e-12


def _complex_dtype(dtype: np.dtype) -> np.dtype:
    return np.dtype(np.complex64) if dtype == np.float32 else np.dtype(np.complex128)


def _fft_chunk(p: int, k: int, itemsize: int) -> int:
    per_sample = k * p * (p // 2 + 1) * 2 * itemsize
    return max(1, _FFT_CHUNK_BYTES // per_sample)


def conv_forward(x: np.ndarray, w: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Valid convolution: (n, P, P) with filters (kf, kf, K) -> (n, M, M, K)."""
    n, p, p2 = x.shape
    kf, _, k = w.shape
    if p != p2:
        raise ValueError(f"inputs must be square, got {x.shape}")
    if p < kf:
        raise ValueError(f"input size {p} smaller than filter size {kf}")
    m = p - kf + 1
    out_dtype = np.result_type(x, w)
    if k <= _OFFSET_PATH_MAX_K:
        out = np.zeros((n, m, m, k), dtype=out_dtype)
        for a in range(kf):
            for c in range(kf):
                out += x[:, a : a + m, c : c + m, None] * w[a, c]
        out += b
        return out
    # spectral cross-correlation; the valid region [0, M) has no circular
    # wraparound because the filter is zero-padded to the input size
    wf_conj = np.conj(np.fft.rfft2(w.transpose(2, 0, 1), s=(p, p)))
    out = np.empty((n, m, m, k), dtype=out_dtype)
    step = _fft_chunk(p, k, out.itemsize)
    for s in range(0, n, step):
        e = min(n, s + step)
        xf = np.fft.rfft2(x[s:e], s=(p, p))
        prod = (xf[:, None] * wf_conj[None]).astype(_complex_dtype(out_dtype))
        corr = np.fft.irfft2(prod, s=(p, p))
        out[s:e] = corr[:, :, :m, :m].transpose(0, 2, 3, 1).astype(out_dtype)
    out += b
    return out


def conv_backward(dout: np.ndarray, x: np.ndarray, w: np.ndarray, need_dx: bool = True):
    """Gradients of a valid convolution: (dx, dw, db); dx is None when the
    caller does not need it (the network's first layer)."""
    n, p, _ = x.shape
    kf, _, k = w.shape
    m = p - kf + 1
    if dout.shape != (n, m, m, k):
        raise ValueError(f"dout shape {dout.shape} does not match ({n}, {m}, {m}, {k})")
    db = dout.sum(axis=(0, 1, 2))
    if k <= _OFFSET_PATH_MAX_K:
        dx = np.zeros_like(x) if need_dx else None
        dw = np.empty_like(w)
        for a in range(kf):
            for c in range(kf):
                xs = x[:, a : a + m, c : c + m]
                dw[a, c] = np.einsum("nij,nijk->k", xs, dout)
                if need_dx:
                    dx[:, a : a + m, c : c + m] += dout @ w[a, c]
        return dx, dw, db
    dwf = np.zeros((k, p, p // 2 + 1), dtype=np.complex128)
    dx = np.zeros_like(x) if need_dx else None
    wf = np.fft.rfft2(w.transpose(2, 0, 1), s=(p, p)) if need_dx else None
    step = _fft_chunk(p, k, x.itemsize)
    for s in range(0, n, step):
        e = min(n, s + step)
        xf = np.fft.rfft2(x[s:e], s=(p, p))
        yf = np.fft.rfft2(dout[s:e].transpose(0, 3, 1, 2), s=(p, p))
        dwf += (xf[:, None] * np.conj(yf)).sum(axis=0)
        if need_dx:
            dx[s:e] = np.fft.irfft2((yf * wf[None]).sum(axis=1), s=(p, p)).astype(
                x.dtype
            )
    dw = np.fft.irfft2(dwf, s=(p, p))[:, :kf, :kf].transpose(1, 2, 0).astype(w.dtype)
    return dx, dw, db


def batchnorm_forward(
    x: np.ndarray,
    scale: np.ndarray,
    offset: np.ndarray,
    running_mean: np.ndarray,
    running_var: np.ndarray,
    eps: float,
    train: bool,
    momentum: float = 0.9,
):
    """Per-channel normalization over the batch and spatial extent.

    Train mode returns (out, cache, (new_running_mean, new_running_var));
    inference mode normalizes with the running statistics and returns
    (out, None, None).
    """
    if train:
        mu = x.mean(axis=(0, 1, 2))
        var = x.var(axis=(0, 1, 2))
        inv_std = 1.0 / np.sqrt(var + eps)
        xhat = (x - mu) * inv_std
        out = scale * xhat + offset
        new_mean = momentum * running_mean + (1.0 - momentum) * mu
        new_var = momentum * running_var + (1.0 - momentum) * var
        return out, (xhat, inv_std), (new_mean, new_var)
    inv_std = 1.0 / np.sqrt(running_var + eps)
    out = scale * ((x - running_mean) * inv_std) + offset
    return out, None, None


def batchnorm_backward(dout: np.ndarray, scale: np.ndarray, cache):
    """Gradients through train-mode batch normalization: (dx, dscale, doffset)."""
    xhat, inv_std = cache
    m = dout.shape[0] * dout.shape[1] * dout.shape[2]
    dscale = (dout * xhat).sum(axis=(0, 1, 2))
    doffset = dout.sum(axis=(0, 1, 2))
    dxhat = dout * scale
    dx = (inv_std / m) * (
        m * dxhat
        - dxhat.sum(axis=(0, 1, 2))
        - xhat * (dxhat * xhat).sum(axis=(0, 1, 2))
    )
    return dx, dscale, doffset


def relu_forward(x: np.ndarray):
    out = np.maximum(x, 0.0)
    return out, x > 0.0


def relu_backward(dout: np.ndarray, mask: np.ndarray) -> np.ndarray:
    return dout * mask


def maxpool_forward(x: np.ndarray):
    """2x2 max pooling with stride 2: (n, M, M, K) -> (n, M/2, M/2, K).

    Returns the pooled tensor and the flat argmax (0..3) of each block.
    """
    n, m, m2_, k = x.shape
    if m != m2_:
        raise ValueError(f"pooling input must be square, got {x.shape}")
    if m % 2 != 0:
        raise ValueError(f"pooling needs an even spatial size, got {m}")
    h = m // 2
    blocks = (
        x.reshape(n, h, 2, h, 2, k).transpose(0, 1, 3, 5, 2, 4).reshape(n, h, h, k, 4)
    )
    idx = blocks.argmax(axis=4).astype(np.int8)
    out = np.take_along_axis(blocks, idx[..., None].astype(np.int64), axis=4)[..., 0]
    return out, idx


def maxpool_backward(dout: np.ndarray, idx: np.ndarray) -> np.ndarray:
    n, h, h2_, k = dout.shape
    dblocks = np.zeros((n, h, h, k, 4), dtype=dout.dtype)
    np.put_along_axis(dblocks, idx[..., None].astype(np.int64), dout[..., None], axis=4)
    return (
        dblocks.reshape(n, h, h, k, 2, 2)
        .transpose(0, 1, 4, 2, 5, 3)
        .reshape(n, 2 * h, 2 * h, k)
    )


def fc_forward(x: np.ndarray, w: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Affine map of flattened features: (n, D) with w (O, D) -> (n, O)."""
    if x.shape[1] != w.shape[1]:
        raise ValueError(f"feature dim {x.shape[1]} does not match weights {w.shape}")
    return x @ w.T + b


def fc_backward(dout: np.ndarray, x: np.ndarray, w: np.ndarray):
    dw = dout.T @ x
    db = dout.sum(axis=0)
    dx = dout @ w
    return dx, dw, db


def softmax(logits: np.ndarray) -> np.ndarray:
    """Row-wise softmax with max subtraction for overflow safety."""
    z = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def _true_class_probs(probs: np.ndarray, labels: np.ndarray) -> np.ndarray:
    labels = np.asarray(labels)
    o = probs.shape[1]
    if labels.min() < 1 or labels.max() > o:
        raise ValueError(f"labels must lie in 1..{o}")
    return probs[np.arange(probs.shape[0]), labels - 1]


def cross_entropy(probs: np.ndarray, labels: np.ndarray) -> float:
    """Mean negative log-probability of the true class; the log argument is
    clamped at PROB_FLOOR. Labels are 1-based."""
    p = _true_class_probs(probs, labels)
    return float(-np.mean(np.log(np.maximum(p, PROB_FLOOR))))


def softmax_cross_entropy_grad(probs: np.ndarray, labels: np.ndarray) -> np.ndarray:
    """Gradient of the cross-entropy with respect to the logits.

    The floor in `cross_entropy` only guards the reported loss value;
    saturated-but-wrong predictions must keep their corrective gradient.
    """
    n = probs.shape[0]
    g = probs.copy()
    g[np.arange(n), np.asarray(labels) - 1] -= 1.0
    g /= n
    return g


def classify(probs: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Predicted 1-based class per row: argmax, ties broken uniformly at
    random from the tied set using the provided generator."""
    probs = np.atleast_2d(probs)
    top = probs.max(axis=1, keepdims=True)
    tied = probs == top
    preds = probs.argmax(axis=1)
    multi = np.flatnonzero(tied.sum(axis=1) > 1)
    for i in multi:
        preds[i] = rng.choice(np.flatnonzero(tied[i]))
    return preds + 1
