from .base_layer import Module, Sequential, glorot_init, get_kernel_size, ACTIVATIONS
from .linear import Linear, dense_forward
from .conv import Conv2d, UpsampleConv2d
from .activation import *

__all__ = [
    "Module",
    "Sequential",
    "glorot_init",
    "get_kernel_size",
    "ACTIVATIONS",
    "Linear",
    "dense_forward",
    "Conv2d",
    "UpsampleConv2d",
    "ReLU",
    "Sigmoid",
    "Flatten",
    "Reshape",
    "apply_activation",
]
