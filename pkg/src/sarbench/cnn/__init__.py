"""From-scratch convolutional classifier: layers, network, optimizer, training."""

from .layers import (
    classify,
    conv_forward,
    cross_entropy,
    fc_forward,
    maxpool_forward,
    relu_forward,
    softmax,
)
from .network import (
    PARAM_KEYS,
    ModelParams,
    backward,
    batch_loss,
    dimension_chain,
    forward,
    init_params,
)
from .optim import AdamState, adam_step, init_adam
from .training import (
    ConfusionMatrix,
    EpochMetrics,
    TrainConfig,
    TrainResult,
    evaluate,
    normalize_per_sample,
    train,
)

__all__ = [
    "PARAM_KEYS",
    "AdamState",
    "ConfusionMatrix",
    "EpochMetrics",
    "ModelParams",
    "TrainConfig",
    "TrainResult",
    "adam_step",
    "backward",
    "batch_loss",
    "classify",
    "conv_forward",
    "cross_entropy",
    "dimension_chain",
    "evaluate",
    "fc_forward",
    "forward",
    "init_adam",
    "init_params",
    "maxpool_forward",
    "normalize_per_sample",
    "relu_forward",
    "softmax",
    "train",
]
