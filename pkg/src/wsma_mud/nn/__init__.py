"""From-scratch feed-forward networks (dense, conv2d, batch norm) in numpy."""

from .engine import (backward, forward, loss_binary_ce, loss_categorical_ce, loss_for_head,
                     sigmoid, softmax)
from .optim import OptimizerState, optimizer_step
from .params import NetworkParameters, init_parameters
from .spec import (BatchNorm, Conv2D, Dense, Flatten, Head, NetworkSpec, ReLU, build_cnn_spec,
                   build_fcnn_spec)

__all__ = [
    "BatchNorm", "Conv2D", "Dense", "Flatten", "Head", "NetworkParameters", "NetworkSpec",
    "OptimizerState", "ReLU", "backward", "build_cnn_spec", "build_fcnn_spec", "forward",
    "init_parameters", "loss_binary_ce", "loss_categorical_ce", "loss_for_head",
    "optimizer_step", "sigmoid", "softmax",
]
