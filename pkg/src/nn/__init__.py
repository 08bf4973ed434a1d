"""Minimal differentiable-layer engine."""

from .functional import (
    batchnorm_forward,
    conv_time_forward,
    dense_forward,
    dropout_forward,
    maxpool_time_forward,
    softmax_ce,
)
from .gradcheck import GradCheckReport, grad_check
from .layers import ForwardContext, LayerSpec
from .network import Network, Tape
from .optim import AdamState, adam_step
from .weights_io import load_weights, save_weights

__all__ = [
    "AdamState",
    "ForwardContext",
    "GradCheckReport",
    "LayerSpec",
    "Network",
    "Tape",
    "adam_step",
    "batchnorm_forward",
    "conv_time_forward",
    "dense_forward",
    "dropout_forward",
    "grad_check",
    "load_weights",
    "maxpool_time_forward",
    "save_weights",
    "softmax_ce",
]
