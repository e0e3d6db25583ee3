"""Minimal neural-network core: layers, losses, Adam, gradient checking."""

from .activations import (
    relu,
    relu_backward,
    sigmoid,
    sigmoid_backward,
    softmax,
    softmax_backward,
    tanh,
    tanh_backward,
)
from .adam import Adam
from .gradcheck import GradCheckReport, check_layer, gradient_check, numeric_gradient
from .layers import (
    LSTM,
    Conv1D,
    Dense,
    Dropout,
    Flatten,
    Layer,
    MaxPool1D,
    Parameter,
    ReLU,
    dropout,
)
from .losses import (
    EPSILON,
    binary_cross_entropy,
    binary_cross_entropy_grad,
    binary_logit_grad,
    sparse_categorical_cross_entropy,
    sparse_categorical_logit_grad,
)
from .tensor import active_dtype, as_tensor, precision

__all__ = [
    "Adam",
    "Conv1D",
    "Dense",
    "Dropout",
    "EPSILON",
    "Flatten",
    "GradCheckReport",
    "LSTM",
    "Layer",
    "MaxPool1D",
    "Parameter",
    "ReLU",
    "active_dtype",
    "as_tensor",
    "binary_cross_entropy",
    "binary_cross_entropy_grad",
    "binary_logit_grad",
    "check_layer",
    "dropout",
    "gradient_check",
    "numeric_gradient",
    "precision",
    "relu",
    "relu_backward",
    "sigmoid",
    "sigmoid_backward",
    "softmax",
    "softmax_backward",
    "sparse_categorical_cross_entropy",
    "sparse_categorical_logit_grad",
    "tanh",
    "tanh_backward",
]
