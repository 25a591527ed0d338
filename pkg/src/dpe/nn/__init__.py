"""Dense float64 tensors with reverse-mode autodiff, GRU layers and Adam."""

from .layers import GRULayer, GRUStack, Params, glorot, gru_step
from .optim import Adam, AdamState, adam_step
from .tensor import (
    AllMasked,
    GraphCycle,
    LabelOutOfRange,
    ShapeMismatch,
    Tensor,
    avg_pool,
    backward,
    max_pool,
    no_grad,
    softmax,
    softmax_xent,
)

__all__ = [
    "Adam", "AdamState", "AllMasked", "GRULayer", "GRUStack", "GraphCycle", "LabelOutOfRange",
    "Params", "ShapeMismatch", "Tensor", "adam_step", "avg_pool", "backward", "glorot", "gru_step",
    "max_pool", "no_grad", "softmax", "softmax_xent",
]
